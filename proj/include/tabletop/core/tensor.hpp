#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <vector>

namespace tabletop {

// Dense row-major tensor of doubles. Shapes are small (<= 4 dims in practice).
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(count(shape)), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    assert(static_cast<int64_t>(data.size()) == count(shape));
  }

  static int64_t count(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape.size()); }

  double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  // 2-D accessors (rows x cols).
  int rows() const { assert(rank() == 2); return shape[0]; }
  int cols() const { assert(rank() == 2); return shape[1]; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  // 3-D accessor (channels x height x width).
  double& at3(int c, int h, int w) {
    int H = shape[1], W = shape[2];
    return data[(static_cast<size_t>(c) * H + h) * W + w];
  }
  double at3(int c, int h, int w) const {
    int H = shape[1], W = shape[2];
    return data[(static_cast<size_t>(c) * H + h) * W + w];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void add_(const Tensor& o) {
    assert(same_shape(o));
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  }
  void scale_(double a) {
    for (double& v : data) v *= a;
  }
  void zero_() { std::fill(data.begin(), data.end(), 0.0); }
};

}  // namespace tabletop
