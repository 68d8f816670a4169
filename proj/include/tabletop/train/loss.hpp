#pragma once

#include <memory>
#include <vector>

#include "tabletop/model/policy.hpp"

namespace tabletop {

// Diagnostic decomposition of the Eq. 8 objective. The split is exact:
// total = position + rotation + gripper + ce.
struct LossComponents {
  double total = 0, position = 0, rotation = 0, gripper = 0, ce = 0;
  void add(const LossComponents& o) {
    total += o.total;
    position += o.position;
    rotation += o.rotation;
    gripper += o.gripper;
    ce += o.ce;
  }
  void scale(double f) {
    total *= f;
    position *= f;
    rotation *= f;
    gripper *= f;
    ce *= f;
  }
};

// Sign-canonicalized (scalar >= 0) 8-component training target.
inline std::shared_ptr<Tensor> action_target(const Action& a) {
  auto t = std::make_shared<Tensor>(Tensor({1, 8}));
  double sgn = a.qw < 0 ? -1.0 : 1.0;
  (*t)[0] = a.px;
  (*t)[1] = a.py;
  (*t)[2] = a.pz;
  (*t)[3] = sgn * a.qw;
  (*t)[4] = sgn * a.qx;
  (*t)[5] = sgn * a.qy;
  (*t)[6] = sgn * a.qz;
  (*t)[7] = a.open;  // {0,1} gripper target
  return t;
}

// Eq. 8 for one episode: sum over steps of the 8-component action MSE plus one
// cross-entropy term on the task distribution. Returns the differentiable
// total and fills `out` with the exact component split.
inline Var bc_loss(const std::vector<StepPrediction>& preds,
                   const std::vector<Action>& targets, int task_index,
                   LossComponents* out = nullptr) {
  if (preds.empty() || preds.size() != targets.size())
    throw std::invalid_argument("bc_loss: prediction/target step counts differ");
  std::vector<Var> terms;
  LossComponents comps;
  for (size_t t = 0; t < preds.size(); ++t) {
    const StepPrediction& p = preds[t];
    Var pred = ops::concat_cols({p.position, p.quat, p.open});  // [1,8]
    auto target = action_target(targets[t]);
    terms.push_back(ops::mse_loss(pred, target));
    for (int i = 0; i < 8; ++i) {
      double d = pred.v()[i] - (*target)[i];
      double c = d * d / 8.0;
      (i < 3 ? comps.position : i < 7 ? comps.rotation : comps.gripper) += c;
    }
  }
  if (preds[0].task_log.valid()) {
    if (task_index < 0 || task_index >= preds[0].task_log.v().cols())
      throw std::invalid_argument("bc_loss: task index out of range");
    Var ce = ops::cross_entropy_logits(preds[0].task_log, task_index);
    comps.ce = ce.v()[0];
    terms.push_back(ce);
  }
  Var total = ops::addN(terms);
  comps.total = total.v()[0];
  if (out) *out = comps;
  return total;
}

}  // namespace tabletop
