#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabletop/core/rng.hpp"
#include "tabletop/core/tensor.hpp"

namespace tabletop {

// Named trainable parameters with deterministic iteration order.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init) {
    if (index_.count(name)) throw std::logic_error("param exists: " + name);
    index_[name] = order_.size();
    order_.push_back(name);
    tensors_.push_back(std::move(init));
    return tensors_.back();
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::logic_error("no such param: " + name);
    return tensors_[it->second];
  }
  const Tensor& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::logic_error("no such param: " + name);
    return tensors_[it->second];
  }

  size_t count() const { return order_.size(); }
  const std::vector<std::string>& names() const { return order_; }
  Tensor& at(size_t i) { return tensors_[i]; }
  const Tensor& at(size_t i) const { return tensors_[i]; }

  int64_t total_scalars() const {
    int64_t n = 0;
    for (const Tensor& t : tensors_) n += t.size();
    return n;
  }

  uint64_t content_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < order_.size(); ++i) {
      h = fnv1a_str(order_[i], h);
      h = fnv1a(tensors_[i].data.data(), tensors_[i].data.size() * sizeof(double), h);
    }
    return h;
  }

  // A same-shaped set of zero tensors, used for gradient accumulation.
  std::vector<Tensor> zeros_like() const {
    std::vector<Tensor> z;
    z.reserve(tensors_.size());
    for (const Tensor& t : tensors_) z.emplace_back(Tensor::zeros(t.shape));
    return z;
  }

 private:
  std::vector<std::string> order_;
  std::vector<Tensor> tensors_;
  std::map<std::string, size_t> index_;
};

// Gradient buffers keyed by position in a ParamStore.
struct GradStore {
  std::vector<Tensor> grads;
  explicit GradStore(const ParamStore& p) : grads(p.zeros_like()) {}
  void zero() {
    for (Tensor& t : grads) t.zero_();
  }
  void add(const GradStore& o) {
    for (size_t i = 0; i < grads.size(); ++i) grads[i].add_(o.grads[i]);
  }
};

}  // namespace tabletop
