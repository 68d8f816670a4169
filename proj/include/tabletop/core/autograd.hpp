#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "tabletop/core/tensor.hpp"

namespace tabletop {

// Reverse-mode autodiff over a per-sample tape. Nodes are created in forward
// order; backward() walks the tape in reverse. Leaves can accumulate their
// gradient into an external sink tensor owned by the caller (parameter grads).
class Graph {
 public:
  struct Node {
    Tensor value;                     // owned value (computed nodes)
    const Tensor* ext_value = nullptr;  // leaves/constants reference external storage
    Tensor grad;                      // allocated lazily
    Tensor* grad_sink = nullptr;      // leaf gradient accumulator
    bool needs_grad = false;
    std::function<void(Graph&, Node&)> backprop;
  };

  const Tensor& val(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.ext_value ? *n.ext_value : n.value;
  }

  Tensor& grad_of(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() == 0) n.grad = Tensor::zeros(val(id).shape);
    return n.grad;
  }

  bool needs_grad(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

  // Constant: no gradient ever flows into it. Caller keeps `t` alive.
  int constant(const Tensor& t) {
    Node n;
    n.ext_value = &t;
    return push(std::move(n));
  }
  // Constant with owned storage.
  int constant_owned(Tensor t) {
    Node n;
    n.value = std::move(t);
    return push(std::move(n));
  }
  // Trainable leaf: grads accumulate into *sink. Caller keeps both alive.
  int leaf(const Tensor& t, Tensor* sink) {
    Node n;
    n.ext_value = &t;
    n.grad_sink = sink;
    n.needs_grad = true;
    return push(std::move(n));
  }

  int make(Tensor value, bool needs_grad,
           std::function<void(Graph&, Node&)> backprop) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.backprop = std::move(backprop);
    return push(std::move(n));
  }

  void backward(int loss_id) {
    {
      Tensor& g = grad_of(loss_id);
      if (g.size() != 1) throw std::runtime_error("backward: loss must be scalar");
      g.data[0] = 1.0;
    }
    for (int i = loss_id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (!n.needs_grad || n.grad.size() == 0) continue;
      if (n.backprop) n.backprop(*this, n);
      if (n.grad_sink) n.grad_sink->add_(n.grad);
    }
  }

  size_t num_nodes() const { return nodes_.size(); }

 private:
  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }
  std::vector<Node> nodes_;
};

// Lightweight handle used by the op library.
struct Var {
  Graph* g = nullptr;
  int id = -1;
  const Tensor& v() const { return g->val(id); }
  bool valid() const { return g != nullptr; }
};

}  // namespace tabletop
