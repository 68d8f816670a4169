#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "tabletop/core/autograd.hpp"

namespace tabletop::ops {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

inline Var wrap(Graph& g, int id) { return Var{&g, id}; }
inline Var constant(Graph& g, const Tensor& t) { return wrap(g, g.constant(t)); }
inline Var constant_owned(Graph& g, Tensor t) {
  return wrap(g, g.constant_owned(std::move(t)));
}
inline Var leaf(Graph& g, const Tensor& t, Tensor* sink) {
  return wrap(g, g.leaf(t, sink));
}

inline void check_same_graph(Var a, Var b) {
  if (a.g != b.g) throw std::logic_error("ops: vars from different graphs");
}

inline Var add(Var a, Var b) {
  check_same_graph(a, b);
  const Tensor &av = a.v(), &bv = b.v();
  if (!av.same_shape(bv)) throw std::logic_error("add: shape mismatch");
  Tensor out = av;
  out.add_(bv);
  Graph& g = *a.g;
  bool ng = g.needs_grad(a.id) || g.needs_grad(b.id);
  int aid = a.id, bid = b.id;
  return wrap(g, g.make(std::move(out), ng, [aid, bid](Graph& gg, Graph::Node& n) {
                if (gg.needs_grad(aid)) gg.grad_of(aid).add_(n.grad);
                if (gg.needs_grad(bid)) gg.grad_of(bid).add_(n.grad);
              }));
}

inline Var addN(std::vector<Var> xs) {
  if (xs.empty()) throw std::logic_error("addN: empty");
  Var acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
  return acc;
}

inline Var scale(Var a, double c) {
  Tensor out = a.v();
  out.scale_(c);
  Graph& g = *a.g;
  bool ng = g.needs_grad(a.id);
  int aid = a.id;
  return wrap(g, g.make(std::move(out), ng, [aid, c](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(aid)) return;
                Tensor& da = gg.grad_of(aid);
                for (int64_t i = 0; i < n.grad.size(); ++i) da[i] += c * n.grad[i];
              }));
}

inline Var mul(Var a, Var b) {
  check_same_graph(a, b);
  const Tensor &av = a.v(), &bv = b.v();
  if (!av.same_shape(bv)) throw std::logic_error("mul: shape mismatch");
  Tensor out = av;
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  Graph& g = *a.g;
  bool ng = g.needs_grad(a.id) || g.needs_grad(b.id);
  int aid = a.id, bid = b.id;
  return wrap(g, g.make(std::move(out), ng, [aid, bid](Graph& gg, Graph::Node& n) {
                const Tensor &av2 = gg.val(aid), &bv2 = gg.val(bid);
                if (gg.needs_grad(aid)) {
                  Tensor& da = gg.grad_of(aid);
                  for (int64_t i = 0; i < n.grad.size(); ++i) da[i] += bv2[i] * n.grad[i];
                }
                if (gg.needs_grad(bid)) {
                  Tensor& db = gg.grad_of(bid);
                  for (int64_t i = 0; i < n.grad.size(); ++i) db[i] += av2[i] * n.grad[i];
                }
              }));
}

// X: [m x n], b: [n] or [1 x n]; adds b to every row.
inline Var add_row_broadcast(Var x, Var b) {
  check_same_graph(x, b);
  const Tensor &xv = x.v(), &bv = b.v();
  int m = xv.rows(), nn = xv.cols();
  if (bv.size() != nn) throw std::logic_error("add_row_broadcast: dim mismatch");
  Tensor out = xv;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < nn; ++c) out.at(r, c) += bv[c];
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id) || g.needs_grad(b.id);
  int xid = x.id, bid = b.id;
  return wrap(g, g.make(std::move(out), ng, [xid, bid, m, nn](Graph& gg, Graph::Node& n) {
                if (gg.needs_grad(xid)) gg.grad_of(xid).add_(n.grad);
                if (gg.needs_grad(bid)) {
                  Tensor& db = gg.grad_of(bid);
                  for (int r = 0; r < m; ++r)
                    for (int c = 0; c < nn; ++c) db[c] += n.grad.at(r, c);
                }
              }));
}

// General 2-D matmul with optional transposes.
inline Var matmul(Var a, Var b, bool ta = false, bool tb = false) {
  check_same_graph(a, b);
  const Tensor &av = a.v(), &bv = b.v();
  int m = ta ? av.cols() : av.rows();
  int k = ta ? av.rows() : av.cols();
  int k2 = tb ? bv.cols() : bv.rows();
  int nn = tb ? bv.rows() : bv.cols();
  if (k != k2) throw std::logic_error("matmul: inner dim mismatch");
  Tensor out({m, nn});
  {
    CMap A(av.data.data(), av.rows(), av.cols());
    CMap B(bv.data.data(), bv.rows(), bv.cols());
    MMap O(out.data.data(), m, nn);
    if (!ta && !tb) O.noalias() = A * B;
    else if (ta && !tb) O.noalias() = A.transpose() * B;
    else if (!ta && tb) O.noalias() = A * B.transpose();
    else O.noalias() = A.transpose() * B.transpose();
  }
  Graph& g = *a.g;
  bool ng = g.needs_grad(a.id) || g.needs_grad(b.id);
  int aid = a.id, bid = b.id;
  return wrap(g, g.make(std::move(out), ng, [aid, bid, ta, tb](Graph& gg, Graph::Node& n) {
                const Tensor &av2 = gg.val(aid), &bv2 = gg.val(bid);
                CMap A(av2.data.data(), av2.rows(), av2.cols());
                CMap B(bv2.data.data(), bv2.rows(), bv2.cols());
                CMap G(n.grad.data.data(), n.grad.rows(), n.grad.cols());
                if (gg.needs_grad(aid)) {
                  Tensor& da = gg.grad_of(aid);
                  MMap DA(da.data.data(), da.rows(), da.cols());
                  if (!ta && !tb) DA.noalias() += G * B.transpose();
                  else if (ta && !tb) DA.noalias() += B * G.transpose();
                  else if (!ta && tb) DA.noalias() += G * B;
                  else DA.noalias() += B.transpose() * G.transpose();
                }
                if (gg.needs_grad(bid)) {
                  Tensor& db = gg.grad_of(bid);
                  MMap DB(db.data.data(), db.rows(), db.cols());
                  if (!ta && !tb) DB.noalias() += A.transpose() * G;
                  else if (ta && !tb) DB.noalias() += A * G;
                  else if (!ta && tb) DB.noalias() += G.transpose() * A;
                  else DB.noalias() += G.transpose() * A.transpose();
                }
              }));
}

inline Var softmax_rows(Var x) {
  const Tensor& xv = x.v();
  int m = xv.rows(), nn = xv.cols();
  Tensor out({m, nn});
  for (int r = 0; r < m; ++r) {
    double mx = xv.at(r, 0);
    for (int c = 1; c < nn; ++c) mx = std::max(mx, xv.at(r, c));
    double s = 0;
    for (int c = 0; c < nn; ++c) {
      double e = std::exp(xv.at(r, c) - mx);
      out.at(r, c) = e;
      s += e;
    }
    for (int c = 0; c < nn; ++c) out.at(r, c) /= s;
  }
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid, m, nn](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                const Tensor& p = n.value;
                for (int r = 0; r < m; ++r) {
                  double dot = 0;
                  for (int c = 0; c < nn; ++c) dot += p.at(r, c) * n.grad.at(r, c);
                  for (int c = 0; c < nn; ++c)
                    dx.at(r, c) += p.at(r, c) * (n.grad.at(r, c) - dot);
                }
              }));
}

// Softmax jointly over every entry of the tensor.
inline Var softmax_all(Var x) {
  const Tensor& xv = x.v();
  Tensor out(xv.shape);
  double mx = xv[0];
  for (int64_t i = 1; i < xv.size(); ++i) mx = std::max(mx, xv[i]);
  double s = 0;
  for (int64_t i = 0; i < xv.size(); ++i) {
    out[i] = std::exp(xv[i] - mx);
    s += out[i];
  }
  for (int64_t i = 0; i < xv.size(); ++i) out[i] /= s;
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                const Tensor& p = n.value;
                double dot = 0;
                for (int64_t i = 0; i < p.size(); ++i) dot += p[i] * n.grad[i];
                for (int64_t i = 0; i < p.size(); ++i)
                  dx[i] += p[i] * (n.grad[i] - dot);
              }));
}

// Per-row layer norm with affine parameters gamma, beta of size [n].
inline Var layernorm_rows(Var x, Var gamma, Var beta, double eps = 1e-5) {
  check_same_graph(x, gamma);
  check_same_graph(x, beta);
  const Tensor& xv = x.v();
  int m = xv.rows(), nn = xv.cols();
  const Tensor &gv = gamma.v(), &bv = beta.v();
  if (gv.size() != nn || bv.size() != nn)
    throw std::logic_error("layernorm: affine dim mismatch");
  Tensor out({m, nn});
  auto stats = std::make_shared<std::vector<double>>(static_cast<size_t>(m) * 2);
  auto yhat = std::make_shared<Tensor>(Tensor({m, nn}));
  for (int r = 0; r < m; ++r) {
    double mu = 0;
    for (int c = 0; c < nn; ++c) mu += xv.at(r, c);
    mu /= nn;
    double var = 0;
    for (int c = 0; c < nn; ++c) {
      double d = xv.at(r, c) - mu;
      var += d * d;
    }
    var /= nn;
    double inv = 1.0 / std::sqrt(var + eps);
    (*stats)[static_cast<size_t>(r) * 2] = mu;
    (*stats)[static_cast<size_t>(r) * 2 + 1] = inv;
    for (int c = 0; c < nn; ++c) {
      double y = (xv.at(r, c) - mu) * inv;
      yhat->at(r, c) = y;
      out.at(r, c) = gv[c] * y + bv[c];
    }
  }
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id) || g.needs_grad(gamma.id) || g.needs_grad(beta.id);
  int xid = x.id, gid = gamma.id, bid = beta.id;
  return wrap(g, g.make(std::move(out), ng,
                        [xid, gid, bid, m, nn, stats, yhat](Graph& gg, Graph::Node& n) {
                const Tensor& gv2 = gg.val(gid);
                if (gg.needs_grad(gid)) {
                  Tensor& dg = gg.grad_of(gid);
                  for (int r = 0; r < m; ++r)
                    for (int c = 0; c < nn; ++c) dg[c] += n.grad.at(r, c) * yhat->at(r, c);
                }
                if (gg.needs_grad(bid)) {
                  Tensor& db = gg.grad_of(bid);
                  for (int r = 0; r < m; ++r)
                    for (int c = 0; c < nn; ++c) db[c] += n.grad.at(r, c);
                }
                if (gg.needs_grad(xid)) {
                  Tensor& dx = gg.grad_of(xid);
                  for (int r = 0; r < m; ++r) {
                    double inv = (*stats)[static_cast<size_t>(r) * 2 + 1];
                    double s1 = 0, s2 = 0;
                    for (int c = 0; c < nn; ++c) {
                      double dg = n.grad.at(r, c) * gv2[c];
                      s1 += dg;
                      s2 += dg * yhat->at(r, c);
                    }
                    s1 /= nn;
                    s2 /= nn;
                    for (int c = 0; c < nn; ++c) {
                      double dg = n.grad.at(r, c) * gv2[c];
                      dx.at(r, c) += inv * (dg - s1 - yhat->at(r, c) * s2);
                    }
                  }
                }
              }));
}

// Group norm over [C,H,W] with per-channel affine.
inline Var groupnorm(Var x, int groups, Var gamma, Var beta, double eps = 1e-5) {
  const Tensor& xv = x.v();
  if (xv.rank() != 3) throw std::logic_error("groupnorm: expect [C,H,W]");
  int C = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
  if (C % groups != 0) throw std::logic_error("groupnorm: C % groups != 0");
  int cg = C / groups;
  int64_t gsz = static_cast<int64_t>(cg) * H * W;
  Tensor out(xv.shape);
  auto stats = std::make_shared<std::vector<double>>(static_cast<size_t>(groups) * 2);
  auto yhat = std::make_shared<Tensor>(Tensor(xv.shape));
  const Tensor &gv = gamma.v(), &bv = beta.v();
  for (int gi = 0; gi < groups; ++gi) {
    int64_t base = static_cast<int64_t>(gi) * gsz;
    double mu = 0;
    for (int64_t i = 0; i < gsz; ++i) mu += xv[base + i];
    mu /= static_cast<double>(gsz);
    double var = 0;
    for (int64_t i = 0; i < gsz; ++i) {
      double d = xv[base + i] - mu;
      var += d * d;
    }
    var /= static_cast<double>(gsz);
    double inv = 1.0 / std::sqrt(var + eps);
    (*stats)[static_cast<size_t>(gi) * 2] = mu;
    (*stats)[static_cast<size_t>(gi) * 2 + 1] = inv;
    for (int64_t i = 0; i < gsz; ++i) {
      int c = gi * cg + static_cast<int>(i / (static_cast<int64_t>(H) * W));
      double y = (xv[base + i] - mu) * inv;
      (*yhat)[base + i] = y;
      out[base + i] = gv[c] * y + bv[c];
    }
  }
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id) || g.needs_grad(gamma.id) || g.needs_grad(beta.id);
  int xid = x.id, gid = gamma.id, bid = beta.id;
  return wrap(g, g.make(std::move(out), ng,
                        [xid, gid, bid, groups, cg, H, W, gsz, stats, yhat](Graph& gg,
                                                                            Graph::Node& n) {
                const Tensor& gv2 = gg.val(gid);
                int64_t hw = static_cast<int64_t>(H) * W;
                if (gg.needs_grad(gid) || gg.needs_grad(bid)) {
                  Tensor* dg = gg.needs_grad(gid) ? &gg.grad_of(gid) : nullptr;
                  Tensor* db = gg.needs_grad(bid) ? &gg.grad_of(bid) : nullptr;
                  int C = groups * cg;
                  for (int c = 0; c < C; ++c) {
                    int64_t base = static_cast<int64_t>(c) * hw;
                    for (int64_t i = 0; i < hw; ++i) {
                      if (dg) (*dg)[c] += n.grad[base + i] * (*yhat)[base + i];
                      if (db) (*db)[c] += n.grad[base + i];
                    }
                  }
                }
                if (gg.needs_grad(xid)) {
                  Tensor& dx = gg.grad_of(xid);
                  for (int gi = 0; gi < groups; ++gi) {
                    int64_t base = static_cast<int64_t>(gi) * gsz;
                    double inv = (*stats)[static_cast<size_t>(gi) * 2 + 1];
                    double s1 = 0, s2 = 0;
                    for (int64_t i = 0; i < gsz; ++i) {
                      int c = gi * cg + static_cast<int>(i / hw);
                      double dgv = n.grad[base + i] * gv2[c];
                      s1 += dgv;
                      s2 += dgv * (*yhat)[base + i];
                    }
                    s1 /= static_cast<double>(gsz);
                    s2 /= static_cast<double>(gsz);
                    for (int64_t i = 0; i < gsz; ++i) {
                      int c = gi * cg + static_cast<int>(i / hw);
                      double dgv = n.grad[base + i] * gv2[c];
                      dx[base + i] += inv * (dgv - s1 - (*yhat)[base + i] * s2);
                    }
                  }
                }
              }));
}

inline Var leaky_relu(Var x, double slope) {
  const Tensor& xv = x.v();
  Tensor out(xv.shape);
  for (int64_t i = 0; i < xv.size(); ++i)
    out[i] = xv[i] > 0 ? xv[i] : slope * xv[i];
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid, slope](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                const Tensor& xv2 = gg.val(xid);
                Tensor& dx = gg.grad_of(xid);
                for (int64_t i = 0; i < xv2.size(); ++i)
                  dx[i] += (xv2[i] > 0 ? 1.0 : slope) * n.grad[i];
              }));
}

inline Var gelu(Var x) {
  const Tensor& xv = x.v();
  Tensor out(xv.shape);
  const double inv_sqrt2 = 0.70710678118654752440;
  for (int64_t i = 0; i < xv.size(); ++i)
    out[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * inv_sqrt2));
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                const double inv_sqrt2 = 0.70710678118654752440;
                const double inv_sqrt2pi = 0.39894228040143267794;
                const Tensor& xv2 = gg.val(xid);
                Tensor& dx = gg.grad_of(xid);
                for (int64_t i = 0; i < xv2.size(); ++i) {
                  double v = xv2[i];
                  double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
                  double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
                  dx[i] += (cdf + v * pdf) * n.grad[i];
                }
              }));
}

// im2col-backed conv2d; x: [Cin,H,W], w: [Cout,Cin,kh,kw], b: [Cout].
inline Var conv2d(Var x, Var w, Var b, int stride, int pad) {
  check_same_graph(x, w);
  check_same_graph(x, b);
  const Tensor& xv = x.v();
  const Tensor& wv = w.v();
  if (xv.rank() != 3 || wv.rank() != 4) throw std::logic_error("conv2d: bad ranks");
  int Cin = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
  int Cout = wv.shape[0], kh = wv.shape[2], kw = wv.shape[3];
  if (wv.shape[1] != Cin) throw std::logic_error("conv2d: channel mismatch");
  int Ho = (H + 2 * pad - kh) / stride + 1;
  int Wo = (W + 2 * pad - kw) / stride + 1;
  int K = Cin * kh * kw;
  int64_t P = static_cast<int64_t>(Ho) * Wo;
  auto cols = std::make_shared<Tensor>(Tensor({K, static_cast<int>(P)}));
  {
    double* cd = cols->data.data();
    for (int ci = 0; ci < Cin; ++ci)
      for (int dy = 0; dy < kh; ++dy)
        for (int dx = 0; dx < kw; ++dx) {
          int row = (ci * kh + dy) * kw + dx;
          double* dst = cd + static_cast<int64_t>(row) * P;
          for (int oy = 0; oy < Ho; ++oy) {
            int iy = oy * stride + dy - pad;
            for (int ox = 0; ox < Wo; ++ox) {
              int ix = ox * stride + dx - pad;
              dst[oy * Wo + ox] =
                  (iy >= 0 && iy < H && ix >= 0 && ix < W) ? xv.at3(ci, iy, ix) : 0.0;
            }
          }
        }
  }
  Tensor out({Cout, Ho, Wo});
  {
    CMap Wm(wv.data.data(), Cout, K);
    CMap Cm(cols->data.data(), K, static_cast<int>(P));
    MMap Om(out.data.data(), Cout, static_cast<int>(P));
    Om.noalias() = Wm * Cm;
    const Tensor& bvv = b.v();
    for (int co = 0; co < Cout; ++co)
      for (int64_t p = 0; p < P; ++p) out[co * P + p] += bvv[co];
  }
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id) || g.needs_grad(w.id) || g.needs_grad(b.id);
  int xid = x.id, wid = w.id, bid = b.id;
  return wrap(g, g.make(std::move(out), ng,
                        [xid, wid, bid, Cin, H, W, Cout, kh, kw, stride, pad, Ho, Wo, K,
                         P, cols](Graph& gg, Graph::Node& n) {
                CMap G(n.grad.data.data(), Cout, static_cast<int>(P));
                if (gg.needs_grad(bid)) {
                  Tensor& db = gg.grad_of(bid);
                  // plain loop: Eigen's vectorized reduction order varies with
                  // buffer alignment, breaking bit-exact run-to-run replays
                  const double* gp = n.grad.data.data();
                  for (int co = 0; co < Cout; ++co) {
                    double s = 0;
                    for (int64_t p = 0; p < static_cast<int64_t>(P); ++p)
                      s += gp[co * static_cast<int64_t>(P) + p];
                    db[co] += s;
                  }
                }
                if (gg.needs_grad(wid)) {
                  Tensor& dw = gg.grad_of(wid);
                  MMap DW(dw.data.data(), Cout, K);
                  CMap Cm(cols->data.data(), K, static_cast<int>(P));
                  DW.noalias() += G * Cm.transpose();
                }
                if (gg.needs_grad(xid)) {
                  const Tensor& wv2 = gg.val(wid);
                  CMap Wm(wv2.data.data(), Cout, K);
                  EMat dcols = Wm.transpose() * G;  // K x P
                  Tensor& dx = gg.grad_of(xid);
                  for (int ci = 0; ci < Cin; ++ci)
                    for (int dy = 0; dy < kh; ++dy)
                      for (int dxk = 0; dxk < kw; ++dxk) {
                        int row = (ci * kh + dy) * kw + dxk;
                        const double* src = dcols.data() + static_cast<int64_t>(row) * P;
                        for (int oy = 0; oy < Ho; ++oy) {
                          int iy = oy * stride + dy - pad;
                          if (iy < 0 || iy >= H) continue;
                          for (int ox = 0; ox < Wo; ++ox) {
                            int ix = ox * stride + dxk - pad;
                            if (ix < 0 || ix >= W) continue;
                            dx.at3(ci, iy, ix) += src[oy * Wo + ox];
                          }
                        }
                      }
                }
              }));
}

// Block average pooling by integer factor f on [C,H,W].
inline Var avg_pool(Var x, int f) {
  const Tensor& xv = x.v();
  int C = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
  if (H % f != 0 || W % f != 0) throw std::logic_error("avg_pool: size not divisible");
  int Ho = H / f, Wo = W / f;
  Tensor out({C, Ho, Wo});
  double inv = 1.0 / (static_cast<double>(f) * f);
  for (int c = 0; c < C; ++c)
    for (int oy = 0; oy < Ho; ++oy)
      for (int ox = 0; ox < Wo; ++ox) {
        double s = 0;
        for (int dy = 0; dy < f; ++dy)
          for (int dx = 0; dx < f; ++dx) s += xv.at3(c, oy * f + dy, ox * f + dx);
        out.at3(c, oy, ox) = s * inv;
      }
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid, f, C, Ho, Wo, inv](Graph& gg,
                                                                     Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                for (int c = 0; c < C; ++c)
                  for (int oy = 0; oy < Ho; ++oy)
                    for (int ox = 0; ox < Wo; ++ox) {
                      double gv = n.grad.at3(c, oy, ox) * inv;
                      for (int dy = 0; dy < f; ++dy)
                        for (int dx2 = 0; dx2 < f; ++dx2)
                          dx.at3(c, oy * f + dy, ox * f + dx2) += gv;
                    }
              }));
}

// Mean over spatial dims: [C,H,W] -> [1,C].
inline Var spatial_mean(Var x) {
  const Tensor& xv = x.v();
  int C = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
  int64_t hw = static_cast<int64_t>(H) * W;
  Tensor out({1, C});
  for (int c = 0; c < C; ++c) {
    double s = 0;
    for (int64_t i = 0; i < hw; ++i) s += xv[c * hw + i];
    out[c] = s / static_cast<double>(hw);
  }
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid, C, hw](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                double inv = 1.0 / static_cast<double>(hw);
                for (int c = 0; c < C; ++c) {
                  double gv = n.grad[c] * inv;
                  for (int64_t i = 0; i < hw; ++i) dx[c * hw + i] += gv;
                }
              }));
}

// x2 bilinear upsampling (half-pixel centers), [C,H,W] -> [C,2H,2W].
inline Var upsample_bilinear2x(Var x) {
  const Tensor& xv = x.v();
  int C = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
  int Ho = 2 * H, Wo = 2 * W;
  // Precompute 1-D interpolation (index0, weight0) per output coordinate.
  auto axis = [](int out_n, int in_n, std::vector<int>& i0, std::vector<double>& w0) {
    i0.resize(static_cast<size_t>(out_n));
    w0.resize(static_cast<size_t>(out_n));
    for (int o = 0; o < out_n; ++o) {
      double src = (o + 0.5) * 0.5 - 0.5;
      int lo = static_cast<int>(std::floor(src));
      double t = src - lo;
      if (lo < 0) { lo = 0; t = 0.0; }
      if (lo >= in_n - 1) { lo = in_n - 2 >= 0 ? in_n - 2 : 0; t = in_n > 1 ? 1.0 : 0.0; }
      i0[static_cast<size_t>(o)] = lo;
      w0[static_cast<size_t>(o)] = 1.0 - t;
    }
  };
  auto yi = std::make_shared<std::vector<int>>();
  auto yw = std::make_shared<std::vector<double>>();
  auto xi = std::make_shared<std::vector<int>>();
  auto xw = std::make_shared<std::vector<double>>();
  axis(Ho, H, *yi, *yw);
  axis(Wo, W, *xi, *xw);
  Tensor out({C, Ho, Wo});
  for (int c = 0; c < C; ++c)
    for (int oy = 0; oy < Ho; ++oy) {
      int y0 = (*yi)[static_cast<size_t>(oy)];
      int y1 = std::min(y0 + 1, H - 1);
      double wy = (*yw)[static_cast<size_t>(oy)];
      for (int ox = 0; ox < Wo; ++ox) {
        int x0 = (*xi)[static_cast<size_t>(ox)];
        int x1 = std::min(x0 + 1, W - 1);
        double wx = (*xw)[static_cast<size_t>(ox)];
        out.at3(c, oy, ox) = wy * (wx * xv.at3(c, y0, x0) + (1 - wx) * xv.at3(c, y0, x1)) +
                             (1 - wy) * (wx * xv.at3(c, y1, x0) + (1 - wx) * xv.at3(c, y1, x1));
      }
    }
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng,
                        [xid, C, H, W, Ho, Wo, yi, yw, xi, xw](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                for (int c = 0; c < C; ++c)
                  for (int oy = 0; oy < Ho; ++oy) {
                    int y0 = (*yi)[static_cast<size_t>(oy)];
                    int y1 = std::min(y0 + 1, H - 1);
                    double wy = (*yw)[static_cast<size_t>(oy)];
                    for (int ox = 0; ox < Wo; ++ox) {
                      int x0 = (*xi)[static_cast<size_t>(ox)];
                      int x1 = std::min(x0 + 1, W - 1);
                      double wx = (*xw)[static_cast<size_t>(ox)];
                      double gv = n.grad.at3(c, oy, ox);
                      dx.at3(c, y0, x0) += wy * wx * gv;
                      dx.at3(c, y0, x1) += wy * (1 - wx) * gv;
                      dx.at3(c, y1, x0) += (1 - wy) * wx * gv;
                      dx.at3(c, y1, x1) += (1 - wy) * (1 - wx) * gv;
                    }
                  }
              }));
}

// Concatenate along the leading dimension; trailing dims must agree.
inline Var concat0(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::logic_error("concat0: empty");
  Graph& g = *xs[0].g;
  std::vector<int> shape = xs[0].v().shape;
  int total = 0;
  for (const Var& x : xs) {
    const Tensor& t = x.v();
    for (size_t i = 1; i < shape.size(); ++i)
      if (t.shape[i] != shape[i]) throw std::logic_error("concat0: trailing mismatch");
    total += t.shape[0];
  }
  shape[0] = total;
  Tensor out(shape);
  int64_t off = 0;
  bool ng = false;
  std::vector<int> ids;
  std::vector<int64_t> offsets;
  std::vector<int64_t> sizes;
  for (const Var& x : xs) {
    const Tensor& t = x.v();
    std::copy(t.data.begin(), t.data.end(), out.data.begin() + off);
    ids.push_back(x.id);
    offsets.push_back(off);
    sizes.push_back(t.size());
    off += t.size();
    ng = ng || g.needs_grad(x.id);
  }
  return wrap(g, g.make(std::move(out), ng,
                        [ids, offsets, sizes](Graph& gg, Graph::Node& n) {
                for (size_t i = 0; i < ids.size(); ++i) {
                  if (!gg.needs_grad(ids[i])) continue;
                  Tensor& dx = gg.grad_of(ids[i]);
                  for (int64_t j = 0; j < sizes[i]; ++j) dx[j] += n.grad[offsets[i] + j];
                }
              }));
}

// Slice along the leading dimension.
inline Var slice0(Var x, int start, int len) {
  const Tensor& xv = x.v();
  std::vector<int> shape = xv.shape;
  int64_t inner = xv.size() / shape[0];
  if (start < 0 || start + len > shape[0]) throw std::logic_error("slice0: out of range");
  shape[0] = len;
  Tensor out(shape);
  std::copy(xv.data.begin() + start * inner, xv.data.begin() + (start + len) * inner,
            out.data.begin());
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid, start, inner](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                for (int64_t j = 0; j < n.grad.size(); ++j)
                  dx[start * inner + j] += n.grad[j];
              }));
}

inline Var slice_cols(Var x, int start, int len) {
  const Tensor& xv = x.v();
  int m = xv.rows(), nn = xv.cols();
  if (start < 0 || start + len > nn) throw std::logic_error("slice_cols: out of range");
  Tensor out({m, len});
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < len; ++c) out.at(r, c) = xv.at(r, start + c);
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid, start, m, len](Graph& gg,
                                                                 Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                for (int r = 0; r < m; ++r)
                  for (int c = 0; c < len; ++c) dx.at(r, start + c) += n.grad.at(r, c);
              }));
}

inline Var concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::logic_error("concat_cols: empty");
  Graph& g = *xs[0].g;
  int m = xs[0].v().rows();
  int total = 0;
  for (const Var& x : xs) {
    if (x.v().rows() != m) throw std::logic_error("concat_cols: row mismatch");
    total += x.v().cols();
  }
  Tensor out({m, total});
  std::vector<int> ids, widths, starts;
  int off = 0;
  bool ng = false;
  for (const Var& x : xs) {
    const Tensor& t = x.v();
    int w = t.cols();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < w; ++c) out.at(r, off + c) = t.at(r, c);
    ids.push_back(x.id);
    widths.push_back(w);
    starts.push_back(off);
    off += w;
    ng = ng || g.needs_grad(x.id);
  }
  return wrap(g, g.make(std::move(out), ng,
                        [ids, widths, starts, m](Graph& gg, Graph::Node& n) {
                for (size_t i = 0; i < ids.size(); ++i) {
                  if (!gg.needs_grad(ids[i])) continue;
                  Tensor& dx = gg.grad_of(ids[i]);
                  for (int r = 0; r < m; ++r)
                    for (int c = 0; c < widths[i]; ++c)
                      dx.at(r, c) += n.grad.at(r, starts[i] + c);
                }
              }));
}

inline Var transpose2d(Var x) {
  const Tensor& xv = x.v();
  int m = xv.rows(), nn = xv.cols();
  Tensor out({nn, m});
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < nn; ++c) out.at(c, r) = xv.at(r, c);
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid, m, nn](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                for (int r = 0; r < m; ++r)
                  for (int c = 0; c < nn; ++c) dx.at(r, c) += n.grad.at(c, r);
              }));
}

inline Var reshape(Var x, std::vector<int> shape) {
  const Tensor& xv = x.v();
  if (Tensor::count(shape) != xv.size()) throw std::logic_error("reshape: size mismatch");
  Tensor out(std::move(shape), xv.data);
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                for (int64_t i = 0; i < n.grad.size(); ++i) dx[i] += n.grad[i];
              }));
}

// out[j] = sum_i b[i] * points[i][j]; b: any shape with N entries, points: [N,3] constant.
inline Var weighted_sum_points(Var b, std::shared_ptr<const Tensor> points) {
  const Tensor& bv = b.v();
  int64_t N = bv.size();
  if (points->rows() != N || points->cols() != 3)
    throw std::logic_error("weighted_sum_points: shape mismatch");
  Tensor out({1, 3});
  for (int64_t i = 0; i < N; ++i)
    for (int j = 0; j < 3; ++j) out[j] += bv[i] * points->at(static_cast<int>(i), j);
  Graph& g = *b.g;
  bool ng = g.needs_grad(b.id);
  int bid = b.id;
  return wrap(g, g.make(std::move(out), ng, [bid, points, N](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(bid)) return;
                Tensor& db = gg.grad_of(bid);
                for (int64_t i = 0; i < N; ++i)
                  for (int j = 0; j < 3; ++j)
                    db[i] += n.grad[j] * points->at(static_cast<int>(i), j);
              }));
}

// Mean squared error against a constant target; returns scalar.
inline Var mse_loss(Var pred, std::shared_ptr<const Tensor> target) {
  const Tensor& pv = pred.v();
  if (pv.size() != target->size()) throw std::logic_error("mse_loss: size mismatch");
  int64_t N = pv.size();
  double s = 0;
  for (int64_t i = 0; i < N; ++i) {
    double d = pv[i] - (*target)[i];
    s += d * d;
  }
  Tensor out = Tensor::scalar(s / static_cast<double>(N));
  Graph& g = *pred.g;
  bool ng = g.needs_grad(pred.id);
  int pid = pred.id;
  return wrap(g, g.make(std::move(out), ng, [pid, target, N](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(pid)) return;
                const Tensor& pv2 = gg.val(pid);
                Tensor& dp = gg.grad_of(pid);
                double c = 2.0 * n.grad[0] / static_cast<double>(N);
                for (int64_t i = 0; i < N; ++i) dp[i] += c * (pv2[i] - (*target)[i]);
              }));
}

// Cross-entropy from logits (single row) against integer class target.
inline Var cross_entropy_logits(Var logits, int target) {
  const Tensor& zv = logits.v();
  int64_t N = zv.size();
  if (target < 0 || target >= N) throw std::logic_error("cross_entropy: target out of range");
  double mx = zv[0];
  for (int64_t i = 1; i < N; ++i) mx = std::max(mx, zv[i]);
  double s = 0;
  for (int64_t i = 0; i < N; ++i) s += std::exp(zv[i] - mx);
  double lse = mx + std::log(s);
  Tensor out = Tensor::scalar(lse - zv[target]);
  Graph& g = *logits.g;
  bool ng = g.needs_grad(logits.id);
  int zid = logits.id;
  return wrap(g, g.make(std::move(out), ng, [zid, target, N](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(zid)) return;
                const Tensor& zv2 = gg.val(zid);
                Tensor& dz = gg.grad_of(zid);
                double mx2 = zv2[0];
                for (int64_t i = 1; i < N; ++i) mx2 = std::max(mx2, zv2[i]);
                double s2 = 0;
                for (int64_t i = 0; i < N; ++i) s2 += std::exp(zv2[i] - mx2);
                for (int64_t i = 0; i < N; ++i) {
                  double p = std::exp(zv2[i] - mx2) / s2;
                  dz[i] += n.grad[0] * (p - (static_cast<int64_t>(target) == i ? 1.0 : 0.0));
                }
              }));
}

// Zero out selected rows (mask[r] in {0,1}); mask is a constant.
inline Var mask_rows(Var x, std::shared_ptr<const std::vector<double>> mask) {
  const Tensor& xv = x.v();
  int m = xv.rows(), nn = xv.cols();
  if (static_cast<int>(mask->size()) != m) throw std::logic_error("mask_rows: bad mask");
  Tensor out = xv;
  for (int r = 0; r < m; ++r)
    if ((*mask)[static_cast<size_t>(r)] == 0.0)
      for (int c = 0; c < nn; ++c) out.at(r, c) = 0.0;
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid, mask, m, nn](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                for (int r = 0; r < m; ++r)
                  if ((*mask)[static_cast<size_t>(r)] != 0.0)
                    for (int c = 0; c < nn; ++c) dx.at(r, c) += n.grad.at(r, c);
              }));
}

// Broadcast a [1,d] row into a [d,H,W] map.
inline Var broadcast_row_to_map(Var x, int H, int W) {
  const Tensor& xv = x.v();
  int d = static_cast<int>(xv.size());
  Tensor out({d, H, W});
  for (int c = 0; c < d; ++c)
    for (int i = 0; i < H * W; ++i) out[static_cast<int64_t>(c) * H * W + i] = xv[c];
  Graph& g = *x.g;
  bool ng = g.needs_grad(x.id);
  int xid = x.id;
  return wrap(g, g.make(std::move(out), ng, [xid, d, H, W](Graph& gg, Graph::Node& n) {
                if (!gg.needs_grad(xid)) return;
                Tensor& dx = gg.grad_of(xid);
                for (int c = 0; c < d; ++c) {
                  double s = 0;
                  for (int i = 0; i < H * W; ++i) s += n.grad[static_cast<int64_t>(c) * H * W + i];
                  dx[c] += s;
                }
              }));
}

}  // namespace tabletop::ops
