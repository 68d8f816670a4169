#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tabletop/data/augment.hpp"
#include "tabletop/data/dataset.hpp"
#include "tabletop/train/checkpoint.hpp"
#include "tabletop/train/loss.hpp"
#include "tabletop/train/optimizer.hpp"

namespace tabletop {

struct TrainConfig {
  double learning_rate = 5e-5;
  int batch_size = 8;
  int iterations = 5000;
  double mask_prob = 0.1;
  double mask_fraction = 0.5;
  uint64_t seed = 0;
  bool augment = true;
  int log_every = 50;
  int checkpoint_every = 0;       // 0: only at the end (if path set)
  std::string checkpoint_path;    // empty: no periodic checkpoints

  void validate() const {
    if (mask_prob < 0 || mask_prob > 1) throw std::invalid_argument("bad mask_prob");
    if (mask_fraction < 0 || mask_fraction > 1)
      throw std::invalid_argument("bad mask_fraction");
    if (batch_size < 1 || iterations < 0 || learning_rate <= 0 || log_every < 1)
      throw std::invalid_argument("bad train config counts");
  }
};

struct LogEntry {
  int64_t iteration = 0;
  LossComponents loss;
};

struct TrainResult {
  std::vector<LogEntry> log;
  int64_t iterations_run = 0;
};

// Per-sample current-observation masking decision (§ training): with
// probability mask_prob, zero a random ceil(mask_fraction * m) subset of the
// current step's m tokens. Returns null when the coin does not fire.
inline std::shared_ptr<const std::vector<double>> draw_token_mask(Rng& rng, int m,
                                                                  double mask_prob,
                                                                  double mask_fraction) {
  if (!rng.bernoulli(mask_prob)) return nullptr;
  int n_mask = static_cast<int>(std::ceil(mask_fraction * m));
  std::vector<int> idx(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) idx[static_cast<size_t>(i)] = i;
  rng.shuffle(idx);
  auto mask = std::make_shared<std::vector<double>>(static_cast<size_t>(m), 1.0);
  for (int i = 0; i < n_mask; ++i) (*mask)[static_cast<size_t>(idx[static_cast<size_t>(i)])] = 0.0;
  return mask;
}

// The behavioral-cloning loop: batches of full episodes, teacher forcing,
// Eq. 8 loss, Adam. Deterministic in (dataset, configs, seed); single-threaded.
class Trainer {
 public:
  Trainer(Policy& policy, const Dataset& data, TrainConfig cfg,
          std::vector<int> episode_subset = {})
      : policy_(policy), data_(data), cfg_(cfg), opt_(policy.params),
        rng_(mix_seed(0x7a11e2u, cfg.seed, policy.cfg.hash(), 0)) {
    cfg_.validate();
    if (episode_subset.empty()) {
      for (size_t i = 0; i < data.episodes.size(); ++i)
        episodes_.push_back(static_cast<int>(i));
    } else {
      episodes_ = std::move(episode_subset);
    }
    if (episodes_.empty()) throw std::invalid_argument("train: empty dataset");
    for (int i : episodes_)
      if (i < 0 || i >= static_cast<int>(data.episodes.size()))
        throw std::invalid_argument("train: episode index out of range");
  }

  // Restores optimizer/iteration/rng state to resume a run mid-stream.
  void restore(const Checkpoint& ck) {
    if (!ck.opt.m.empty()) opt_ = ck.opt;
    iteration_ = ck.iteration;
    if (!ck.rng_state.empty()) rng_.deserialize(ck.rng_state);
  }

  int64_t iteration() const { return iteration_; }
  const AdamState& optimizer() const { return opt_; }

  Checkpoint checkpoint() const {
    Checkpoint ck;
    ck.cfg = policy_.cfg;
    for (size_t i = 0; i < policy_.params.count(); ++i)
      ck.params.add(policy_.params.names()[i], policy_.params.at(i));
    ck.opt = opt_;
    ck.iteration = iteration_;
    ck.rng_state = rng_.serialize();
    return ck;
  }

  // One optimization step over a sampled batch; returns batch-mean components.
  LossComponents step() {
    GradStore grads(policy_.params);
    LossComponents total;
    std::vector<int> batch_ids;
    double batch_inv = 1.0 / cfg_.batch_size;
    for (int b = 0; b < cfg_.batch_size; ++b) {
      int idx = episodes_[static_cast<size_t>(
          rng_.uniform_int(static_cast<int>(episodes_.size())))];
      batch_ids.push_back(idx);
      const Episode& ep = data_.episodes[static_cast<size_t>(idx)];

      std::vector<Observation> obs = ep.observations;
      if (cfg_.augment)
        for (Observation& o : obs) o = augment(o, rng_);  // independent per step

      std::vector<std::shared_ptr<const std::vector<double>>> masks;
      if (policy_.cfg.use_masking && cfg_.mask_prob > 0) {
        // one independent coin per step-sample of the episode
        for (size_t t = 0; t < obs.size(); ++t)
          masks.push_back(draw_token_mask(rng_, policy_.cfg.tokens_per_step(),
                                          cfg_.mask_prob, cfg_.mask_fraction));
      }

      Graph g;
      ParamGraph P(g, policy_.params, &grads);
      std::vector<StepPrediction> preds =
          policy_.forward_episode(P, obs, ep.instruction, masks);
      LossComponents comps;
      Var loss = bc_loss(preds, ep.actions, ep.task_id, &comps);
      if (!std::isfinite(comps.total)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at iteration " << iteration_ + 1
            << "; batch episodes:";
        for (int id : batch_ids) msg << ' ' << id;
        throw std::runtime_error(msg.str());
      }
      Var scaled = ops::scale(loss, batch_inv);
      g.backward(scaled.id);
      comps.scale(batch_inv);
      total.add(comps);
    }
    opt_.step(policy_.params, grads, cfg_.learning_rate);
    ++iteration_;
    return total;
  }

  TrainResult run() {
    TrainResult res;
    int64_t target = iteration_ + cfg_.iterations;
    while (iteration_ < target) {
      LossComponents c = step();
      if (iteration_ == 1 || iteration_ % cfg_.log_every == 0 || iteration_ == target)
        res.log.push_back({iteration_, c});
      ++res.iterations_run;
      if (!cfg_.checkpoint_path.empty() && cfg_.checkpoint_every > 0 &&
          iteration_ % cfg_.checkpoint_every == 0)
        save_checkpoint(cfg_.checkpoint_path, checkpoint());
    }
    if (!cfg_.checkpoint_path.empty())
      save_checkpoint(cfg_.checkpoint_path, checkpoint());
    return res;
  }

 private:
  Policy& policy_;
  const Dataset& data_;
  TrainConfig cfg_;
  AdamState opt_;
  Rng rng_;
  std::vector<int> episodes_;
  int64_t iteration_ = 0;
};

// Convenience wrapper matching the module-level contract: fresh policy
// training from a dataset directory view.
inline TrainResult train(Policy& policy, const Dataset& data, const TrainConfig& cfg,
                         std::vector<int> episode_subset = {}) {
  Trainer t(policy, data, cfg, std::move(episode_subset));
  return t.run();
}

}  // namespace tabletop
