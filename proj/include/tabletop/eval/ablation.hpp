#pragma once

#include <chrono>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "tabletop/eval/rollout.hpp"
#include "tabletop/train/trainer.hpp"

namespace tabletop {

// Ablation ladder: R1 strips everything down to a UNet-only late-fusion
// baseline; each following rung re-enables one component, ending at the full
// model (R8). no_hist and one_view are single-switch variants of the full
// model.
enum class Variant { kR1, kR2, kR3, kR4, kR5, kR6, kR7, kR8, kNoHist, kOneView };

inline const std::vector<std::pair<std::string, Variant>>& variant_names() {
  static const std::vector<std::pair<std::string, Variant>> v = {
      {"R1", Variant::kR1},         {"R2", Variant::kR2},
      {"R3", Variant::kR3},         {"R4", Variant::kR4},
      {"R5", Variant::kR5},         {"R6", Variant::kR6},
      {"R7", Variant::kR7},         {"R8", Variant::kR8},
      {"no_hist", Variant::kNoHist}, {"one_view", Variant::kOneView}};
  return v;
}

inline Variant parse_variant(const std::string& s) {
  for (const auto& [name, v] : variant_names())
    if (name == s) return v;
  throw std::invalid_argument("unknown ablation variant: " + s);
}

inline std::string variant_name(Variant v) {
  for (const auto& [name, vv] : variant_names())
    if (vv == v) return name;
  throw std::logic_error("unnamed variant");
}

// Maps a variant onto the full-model base config. The R-ladder is cumulative:
//   R1  no transformer (UNet-only, per-camera late fusion)
//   R2  +transformer with channel tokens and self-attention
//   R3  +point-cloud input channels
//   R4  +gripper attention map
//   R5  +history tokens
//   R6  +current-step token masking
//   R7  patch tokens instead of channel tokens
//   R8  cross-attention (the full model)
inline PolicyConfig variant_config(PolicyConfig base, Variant v) {
  PolicyConfig c = base;
  auto ladder = [&](int rung) {
    c.use_transformer = rung >= 2;
    c.use_pointcloud = rung >= 3;
    c.use_gripper_map = rung >= 4;
    c.include_history = rung >= 5;
    c.use_masking = rung >= 6;
    c.token_mode = rung >= 7 ? TokenMode::kPatch : TokenMode::kChannel;
    c.attn_mode = rung >= 8 ? AttnMode::kCross : AttnMode::kSelf;
    c.per_camera_softmax = rung < 2;  // late fusion only in the no-transformer row
  };
  switch (v) {
    case Variant::kR1: ladder(1); break;
    case Variant::kR2: ladder(2); break;
    case Variant::kR3: ladder(3); break;
    case Variant::kR4: ladder(4); break;
    case Variant::kR5: ladder(5); break;
    case Variant::kR6: ladder(6); break;
    case Variant::kR7: ladder(7); break;
    case Variant::kR8: ladder(8); break;
    case Variant::kNoHist: c.include_history = false; break;
    case Variant::kOneView: c.cameras = 1; break;
  }
  return c;
}

// Restricts every episode to one rig camera (for training one_view policies).
inline Dataset filter_cameras(const Dataset& d, int camera) {
  Dataset out;
  out.manifest = d.manifest;
  out.manifest.cameras = 1;
  for (const Episode& e : d.episodes) {
    Episode f = e;
    for (Observation& o : f.observations) o = select_cameras(o, {camera});
    out.episodes.push_back(std::move(f));
  }
  return out;
}

struct AblationRow {
  std::string variant;
  bool complete = false;
  double seen_rate = 0, unseen_rate = 0;
  int best_camera = -1;  // one_view only
  EvalReport report;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  std::string to_text() const {
    std::ostringstream os;
    os << "variant   status      seen    unseen\n";
    for (const AblationRow& r : rows) {
      os << std::left << std::setw(10) << r.variant << std::setw(12)
         << (r.complete ? "ok" : "incomplete");
      if (r.complete) {
        os << std::fixed << std::setprecision(4) << std::setw(8) << r.seen_rate
           << std::setw(8) << r.unseen_rate;
        if (r.best_camera >= 0) os << "  (best camera " << r.best_camera << ")";
      } else {
        os << "-       -";
      }
      os << "\n";
    }
    return os.str();
  }
};

// Trains and evaluates each requested variant with identical data, seed, and
// budget. `budget_seconds` is a wall-clock cap: variants that cannot start
// before it runs out are reported as incomplete rather than silently dropped
// (0 disables the cap). one_view trains one policy per rig camera on
// camera-filtered data and reports the best.
inline AblationTable run_ablation(const Dataset& data, const PolicyConfig& base,
                                  const TrainConfig& tcfg,
                                  const std::vector<std::string>& variants,
                                  const std::vector<TaskSpec>& seen_tasks,
                                  const std::vector<TaskSpec>& unseen_tasks,
                                  int eval_episodes, uint64_t seed,
                                  const SimOptions& opts = {},
                                  double budget_seconds = 0) {
  if (data.episodes.empty()) throw std::invalid_argument("run_ablation: empty dataset");
  for (const std::string& v : variants) parse_variant(v);  // fail fast
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };
  AblationTable table;
  for (const std::string& vname : variants) {
    Variant v = parse_variant(vname);
    AblationRow row;
    row.variant = vname;
    if (budget_seconds > 0 && elapsed() >= budget_seconds) {
      table.rows.push_back(row);  // incomplete
      continue;
    }
    PolicyConfig cfg = variant_config(base, v);
    if (v == Variant::kOneView) {
      double best_seen = -1;
      for (int cam = 0; cam < base.cameras; ++cam) {
        Dataset view = filter_cameras(data, cam);
        Policy p(cfg, seed);
        train(p, view, tcfg);
        PolicyActor actor(p, cam);
        EvalReport r = evaluate(actor, seen_tasks, unseen_tasks, eval_episodes,
                                seed, data.manifest.image_hw, opts, cfg.hash(),
                                cfg.t_max);
        if (r.seen_rate() > best_seen) {
          best_seen = r.seen_rate();
          row.seen_rate = r.seen_rate();
          row.unseen_rate = r.unseen_rate();
          row.best_camera = cam;
          row.report = r;
        }
      }
    } else {
      Policy p(cfg, seed);
      train(p, data, tcfg);
      PolicyActor actor(p);
      row.report = evaluate(actor, seen_tasks, unseen_tasks, eval_episodes, seed,
                            data.manifest.image_hw, opts, cfg.hash(), cfg.t_max);
      row.seen_rate = row.report.seen_rate();
      row.unseen_rate = row.report.unseen_rate();
    }
    row.complete = true;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace tabletop
