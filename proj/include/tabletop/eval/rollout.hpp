#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "tabletop/data/dataset.hpp"
#include "tabletop/model/policy.hpp"

namespace tabletop {

// Closed-loop controller interface for rollouts. `begin` is called once per
// episode with the freshly built scene (the expert wrapper plans from it; a
// learned policy only samples its instruction); `act` sees the history of the
// controller's own observations, never ground-truth actions.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual void begin(const Scene& scene, const TaskSpec& task, Rng& rng) = 0;
  virtual Action act(const std::vector<Observation>& history, int t) = 0;
};

// Restricts a multi-camera observation to a subset of the rig's cameras.
inline Observation select_cameras(const Observation& o, const std::vector<int>& cams) {
  Observation out;
  out.allocate(static_cast<int>(cams.size()), o.H, o.W);
  for (size_t j = 0; j < cams.size(); ++j) {
    int k = cams[j];
    if (k < 0 || k >= o.K) throw std::invalid_argument("select_cameras: bad index");
    for (int c = 0; c < 3; ++c)
      for (int h = 0; h < o.H; ++h)
        for (int w = 0; w < o.W; ++w) {
          out.rgb[out.rgb_index(static_cast<int>(j), c, h, w)] =
              o.rgb[o.rgb_index(k, c, h, w)];
          out.pcd[out.rgb_index(static_cast<int>(j), c, h, w)] =
              o.pcd[o.rgb_index(k, c, h, w)];
        }
    for (int h = 0; h < o.H; ++h)
      for (int w = 0; w < o.W; ++w)
        out.gripper_map[out.map_index(static_cast<int>(j), h, w)] =
            o.gripper_map[o.map_index(k, h, w)];
  }
  return out;
}

// Wraps a trained policy as a rollout controller. The instruction is sampled
// from the task's template pool with the rollout rng (matching the training
// distribution); `camera` >= 0 restricts input to that single rig camera.
class PolicyActor : public Actor {
 public:
  explicit PolicyActor(const Policy& p, int camera = -1, int template_id = -1)
      : policy_(p), camera_(camera), template_id_(template_id) {}

  void begin(const Scene&, const TaskSpec& task, Rng& rng) override {
    instruction_ = template_id_ >= 0 ? instruction_for(task, template_id_)
                                     : generate_instruction(task, rng);
  }

  Action act(const std::vector<Observation>& history, int t) override {
    if (camera_ < 0) return policy_.predict_action(history, instruction_, t);
    std::vector<Observation> view;
    view.reserve(history.size());
    for (const Observation& o : history) view.push_back(select_cameras(o, {camera_}));
    return policy_.predict_action(view, instruction_, t);
  }

  const std::string& instruction() const { return instruction_; }

 private:
  const Policy& policy_;
  int camera_;
  int template_id_;
  std::string instruction_;
};

// Scripted-expert controller: plans the demonstration once from the initial
// scene and replays it open loop. A standing regression control for the
// harness itself — it must succeed on every valid task instance.
class ExpertActor : public Actor {
 public:
  void begin(const Scene& scene, const TaskSpec& task, Rng&) override {
    demo_ = expert_demo(scene, task);
  }

  Action act(const std::vector<Observation>&, int t) override {
    if (t < 1 || t > static_cast<int>(demo_.size()))
      return demo_.empty() ? Action{} : demo_.back();
    return demo_[static_cast<size_t>(t - 1)];
  }

 private:
  std::vector<Action> demo_;
};

struct RolloutOutcome {
  std::string task_name;
  int variation_id = 0;
  int64_t seed = 0;
  bool success = false;
  int steps = 0;          // macro steps executed
  bool non_finite = false;
  std::vector<Action> actions;  // executed trajectory, for replay checks
};

// One closed-loop episode: render -> act -> step until success or t_max.
// A non-finite action aborts the episode as a flagged failure.
inline RolloutOutcome rollout(Actor& actor, const TaskSpec& task, int64_t seed,
                              int image_hw, const SimOptions& opts = {},
                              int t_max = 6) {
  RolloutOutcome out;
  out.task_name = task_name_str(task.name);
  out.variation_id = task.variation_id;
  out.seed = seed;
  Scene s = make_scene(task, seed, image_hw, image_hw, opts);
  CameraRig rig = CameraRig::standard(image_hw, image_hw);
  Rng rng(mix_seed(0xe7a1u, static_cast<uint64_t>(seed),
                   static_cast<uint64_t>(task.variation_id),
                   static_cast<uint64_t>(task.task_index)));
  actor.begin(s, task, rng);
  std::vector<Observation> history;
  for (int t = 1; t <= t_max; ++t) {
    history.push_back(render(s, rig));
    Action a = actor.act(history, t);
    bool finite = true;
    for (float v : a.flat())
      if (!std::isfinite(v)) finite = false;
    if (!finite) {
      out.non_finite = true;
      return out;
    }
    out.actions.push_back(a);
    s = step(s, a);
    out.steps = t;
    if (check_success(s, task)) {
      out.success = true;
      return out;
    }
  }
  return out;
}

// Aggregated evaluation over seen/unseen variation splits.
struct EvalReport {
  uint64_t config_hash = 0;
  uint64_t seed = 0;
  int image_hw = 0;
  std::vector<RolloutOutcome> seen, unseen;

  static double rate(const std::vector<RolloutOutcome>& v) {
    if (v.empty()) return 0.0;
    int s = 0;
    for (const RolloutOutcome& o : v) s += o.success ? 1 : 0;
    return static_cast<double>(s) / static_cast<double>(v.size());
  }
  double seen_rate() const { return rate(seen); }
  double unseen_rate() const { return rate(unseen); }

  std::string to_text() const {
    std::ostringstream os;
    os << "split    episodes  successes  success_rate\n";
    auto row = [&](const char* label, const std::vector<RolloutOutcome>& v) {
      int s = 0;
      for (const RolloutOutcome& o : v) s += o.success ? 1 : 0;
      os << std::left << std::setw(9) << label << std::setw(10) << v.size()
         << std::setw(11) << s << std::fixed << std::setprecision(4) << rate(v)
         << "\n";
    };
    row("seen", seen);
    row("unseen", unseen);
    return os.str();
  }
};

// Structured-text serialization with a versioned header; round trips exactly
// (seeds and outcomes are integers, rates are derived).
inline void save_report(const std::string& path, const EvalReport& r) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "tabletop-eval-report v1\n";
  f << "config_hash " << r.config_hash << "\nseed " << r.seed << "\nimage_hw "
    << r.image_hw << "\n";
  auto dump = [&](const char* label, const std::vector<RolloutOutcome>& v) {
    f << label << ' ' << v.size() << "\n";
    for (const RolloutOutcome& o : v)
      f << o.task_name << ' ' << o.variation_id << ' ' << o.seed << ' '
        << (o.success ? 1 : 0) << ' ' << o.steps << ' ' << (o.non_finite ? 1 : 0)
        << "\n";
  };
  dump("seen", r.seen);
  dump("unseen", r.unseen);
}

inline EvalReport load_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string header;
  std::getline(f, header);
  if (header != "tabletop-eval-report v1")
    throw std::runtime_error("eval report: unsupported header: " + header);
  EvalReport r;
  std::string key;
  f >> key >> r.config_hash >> key >> r.seed >> key >> r.image_hw;
  auto slurp = [&](std::vector<RolloutOutcome>& v) {
    size_t n;
    f >> key >> n;
    for (size_t i = 0; i < n; ++i) {
      RolloutOutcome o;
      int succ, nf;
      f >> o.task_name >> o.variation_id >> o.seed >> succ >> o.steps >> nf;
      o.success = succ != 0;
      o.non_finite = nf != 0;
      v.push_back(o);
    }
  };
  slurp(r.seen);
  slurp(r.unseen);
  if (!f) throw std::runtime_error("eval report: malformed body");
  return r;
}

// Rolls the controller over both splits: n_episodes per split, round-robin
// over the split's task list, seeds derived from (seed, split, index).
// Splits must be disjoint by (task, variation).
inline EvalReport evaluate(Actor& actor, const std::vector<TaskSpec>& seen_tasks,
                           const std::vector<TaskSpec>& unseen_tasks, int n_episodes,
                           uint64_t seed, int image_hw, const SimOptions& opts = {},
                           uint64_t config_hash = 0, int t_max = 6) {
  for (const TaskSpec& a : seen_tasks)
    for (const TaskSpec& b : unseen_tasks)
      if (a.name == b.name && a.variation_id == b.variation_id)
        throw std::invalid_argument("evaluate: seen/unseen splits overlap at " +
                                    std::string(task_name_str(a.name)) + " variation " +
                                    std::to_string(a.variation_id));
  if (n_episodes < 0) throw std::invalid_argument("evaluate: negative episode count");
  EvalReport r;
  r.config_hash = config_hash;
  r.seed = seed;
  r.image_hw = image_hw;
  auto run_split = [&](const std::vector<TaskSpec>& tasks, int split_idx,
                       std::vector<RolloutOutcome>& out) {
    if (tasks.empty()) return;
    for (int i = 0; i < n_episodes; ++i) {
      const TaskSpec& task = tasks[static_cast<size_t>(i) % tasks.size()];
      int64_t ep_seed = static_cast<int64_t>(
          mix_seed(seed, static_cast<uint64_t>(split_idx), static_cast<uint64_t>(i), 1));
      out.push_back(rollout(actor, task, ep_seed, image_hw, opts, t_max));
    }
  };
  run_split(seen_tasks, 0, r.seen);
  run_split(unseen_tasks, 1, r.unseen);
  return r;
}

}  // namespace tabletop
