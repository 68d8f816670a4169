#pragma once

#include <array>
#include <vector>

#include "tabletop/data/types.hpp"
#include "tabletop/model/config.hpp"
#include "tabletop/model/param_graph.hpp"

namespace tabletop {

// Per-camera convolutional encoding: activations of all six layers are kept
// for the decoder's skip connections; `out` is the layer-6 map (H/16, W/16, 16).
struct UnetOut {
  Var out;
  std::array<Var, 6> layers;
};

// Builds the [4,H,W] network input for one camera: RGB plus the binary gripper
// attention map (zeroed when the switch is off; the channel stays so weights
// are shape-compatible across ablations).
inline Tensor camera_input(const Observation& obs, int k, bool use_gripper_map) {
  Tensor x({4, obs.H, obs.W});
  for (int c = 0; c < 3; ++c)
    for (int h = 0; h < obs.H; ++h)
      for (int w = 0; w < obs.W; ++w)
        x.at3(c, h, w) = obs.rgb[obs.rgb_index(k, c, h, w)];
  if (use_gripper_map)
    for (int h = 0; h < obs.H; ++h)
      for (int w = 0; w < obs.W; ++w)
        x.at3(3, h, w) = obs.gripper_map[obs.map_index(k, h, w)];
  return x;
}

// 16x-downsampled point-cloud channels (Eq. 2 mean pool). Plain tensor: the
// point cloud is an input, no gradient flows into it.
inline Tensor pooled_pcd(const Observation& obs, int k) {
  int f = 16, Ho = obs.H / f, Wo = obs.W / f;
  Tensor out({3, Ho, Wo});
  double inv = 1.0 / (f * f);
  for (int c = 0; c < 3; ++c)
    for (int oy = 0; oy < Ho; ++oy)
      for (int ox = 0; ox < Wo; ++ox) {
        double s = 0;
        for (int dy = 0; dy < f; ++dy)
          for (int dx = 0; dx < f; ++dx)
            s += obs.pcd[obs.rgb_index(k, c, oy * f + dy, ox * f + dx)];
        out.at3(c, oy, ox) = s * inv;
      }
  return out;
}

// Full-resolution world points as an [K*H*W, 3] matrix for Eq. 7.
inline std::shared_ptr<Tensor> world_points(const Observation& obs) {
  auto pts = std::make_shared<Tensor>(
      Tensor({obs.K * obs.H * obs.W, 3}));
  int64_t row = 0;
  for (int k = 0; k < obs.K; ++k)
    for (int h = 0; h < obs.H; ++h)
      for (int w = 0; w < obs.W; ++w, ++row)
        for (int c = 0; c < 3; ++c)
          pts->at(static_cast<int>(row), c) = obs.pcd[obs.rgb_index(k, c, h, w)];
  return pts;
}

inline UnetOut unet_encode(ParamGraph& P, const PolicyConfig& cfg, Var input) {
  if (input.v().shape[1] % 16 != 0 || input.v().shape[2] % 16 != 0)
    throw std::invalid_argument("unet_encode: image size must be divisible by 16");
  UnetOut u;
  Var x = input;
  for (int i = 1; i <= 6; ++i) {
    std::string c = "unet.conv" + std::to_string(i);
    int stride = i <= 2 ? 1 : 2;
    x = ops::conv2d(x, P(c + ".w"), P(c + ".b"), stride, 1);
    if (i >= 3) {
      std::string n = "unet.gn" + std::to_string(i);
      x = ops::groupnorm(x, cfg.gn_groups, P(n + ".gamma"), P(n + ".beta"));
    }
    x = ops::leaky_relu(x, cfg.leaky_slope);
    u.layers[static_cast<size_t>(i - 1)] = x;
  }
  u.out = x;
  return u;
}

// Channel concatenation of the feature map with the pooled point cloud (Eq. 2).
// `pcd_pool` is zeroed by the caller when the point-cloud input is ablated.
inline Var fuse_pointcloud(ParamGraph& P, Var fmap, const Tensor& pcd_pool) {
  if (fmap.v().shape[1] != pcd_pool.shape[1] || fmap.v().shape[2] != pcd_pool.shape[2])
    throw std::invalid_argument("fuse_pointcloud: spatial shape mismatch");
  return ops::concat0({fmap, ops::constant_owned(P.graph(), pcd_pool)});
}

// Eq. 3 token embedding. `fused` holds one [19,hv,hv] map per camera.
// step_slot selects the E_S row (callers pin it to 0 when history is ablated,
// removing every temporal signal).
inline Var tokenize(ParamGraph& P, const PolicyConfig& cfg, const std::vector<Var>& fused,
                    int step_slot) {
  if (step_slot < 0 || step_slot >= cfg.t_max)
    throw std::invalid_argument("tokenize: step slot out of range");
  if (static_cast<int>(fused.size()) != cfg.cameras)
    throw std::invalid_argument("tokenize: camera count mismatch");
  int hv = fused[0].v().shape[1], grid = hv * fused[0].v().shape[2];
  Var es = ops::slice0(P("tok.ES"), step_slot, 1);
  std::vector<Var> per_camera;
  for (int k = 0; k < cfg.cameras; ++k) {
    Var tk;
    if (cfg.token_mode == TokenMode::kPatch) {
      // rows = grid cells, features = channels
      Var rows = ops::transpose2d(
          ops::reshape(fused[static_cast<size_t>(k)], {cfg.d_v + 3, grid}));
      tk = ops::layernorm_rows(ops::matmul(rows, P("tok.Wf")), P("tok.ln.gamma"),
                               P("tok.ln.beta"));
      tk = ops::add(tk, P("tok.EL"));
    } else {
      // rows = channels, features = flattened spatial values; no E_L
      Var rows = ops::reshape(fused[static_cast<size_t>(k)], {cfg.d_v + 3, grid});
      tk = ops::layernorm_rows(ops::matmul(rows, P("tok.Wc")), P("tok.ln.gamma"),
                               P("tok.ln.beta"));
    }
    tk = ops::add_row_broadcast(tk, ops::slice0(P("tok.EC"), k, 1));
    tk = ops::add_row_broadcast(tk, es);
    tk = ops::add_row_broadcast(tk, P("tok.Etv"));
    per_camera.push_back(tk);
  }
  return ops::concat0(per_camera);
}

// Inverse of tokenize's layout for the decoder: transformer outputs go back to
// one [*,hv,hv] spatial map per camera. Patch mode is an exact reshape; channel
// mode reconstructs spatial planes through a learned d -> grid projection.
inline std::vector<Var> tokens_to_maps(ParamGraph& P, const PolicyConfig& cfg,
                                       Var tokens) {
  int hv = cfg.hv(), grid = hv * hv;
  std::vector<Var> maps;
  int per_cam = cfg.token_mode == TokenMode::kPatch ? grid : cfg.d_v + 3;
  for (int k = 0; k < cfg.cameras; ++k) {
    Var t = ops::slice0(tokens, k * per_cam, per_cam);
    if (cfg.token_mode == TokenMode::kPatch) {
      maps.push_back(ops::reshape(ops::transpose2d(t), {cfg.d, hv, hv}));
    } else {
      maps.push_back(ops::reshape(ops::matmul(t, P("tok.Winv")), {cfg.d_v + 3, hv, hv}));
    }
  }
  return maps;
}

}  // namespace tabletop
