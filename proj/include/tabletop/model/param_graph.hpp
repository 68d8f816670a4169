#pragma once

#include <map>
#include <string>

#include "tabletop/core/ops.hpp"
#include "tabletop/core/param.hpp"

namespace tabletop {

// Binds a ParamStore to a Graph: each named parameter becomes a leaf Var whose
// gradient accumulates into the matching GradStore tensor. When grads is null
// the parameters enter the graph as constants (inference mode).
class ParamGraph {
 public:
  ParamGraph(Graph& g, ParamStore& params, GradStore* grads)
      : g_(g), params_(params), grads_(grads) {}

  Var operator()(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    Var v;
    if (grads_) {
      size_t idx = 0;
      const auto& names = params_.names();
      while (idx < names.size() && names[idx] != name) ++idx;
      if (idx == names.size()) throw std::logic_error("no such param: " + name);
      v = ops::leaf(g_, params_.at(idx), &grads_->grads[idx]);
    } else {
      v = ops::constant(g_, params_.get(name));
    }
    cache_.emplace(name, v);
    return v;
  }

  Graph& graph() { return g_; }

 private:
  Graph& g_;
  ParamStore& params_;
  GradStore* grads_;
  std::map<std::string, Var> cache_;
};

}  // namespace tabletop
