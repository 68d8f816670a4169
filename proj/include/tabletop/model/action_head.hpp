#pragma once

#include <cmath>
#include <vector>

#include "tabletop/model/config.hpp"
#include "tabletop/model/transformer.hpp"
#include "tabletop/model/visual_encoder.hpp"

namespace tabletop {

// Convolution/upsampling decoder: four blocks, each fed the previous output
// concatenated with the matching UNet-encoder skip (layers 6,5,4,3), a x2
// bilinear upsampling after each conv, and a final 1-channel conv on the
// concatenation with the layer-2 activation. Produces per-camera H x W logits.
inline Var decode_heatmap_logits(ParamGraph& P, const PolicyConfig& cfg, Var h_map,
                                 const UnetOut& skips) {
  Var x = h_map;
  const int skip_layers[4] = {5, 4, 3, 2};  // 0-based indices of layers 6,5,4,3
  for (int i = 0; i < 4; ++i) {
    std::string c = "dec.conv" + std::to_string(i + 1);
    x = ops::concat0({x, skips.layers[static_cast<size_t>(skip_layers[i])]});
    x = ops::leaky_relu(ops::conv2d(x, P(c + ".w"), P(c + ".b"), 1, 1), cfg.leaky_slope);
    x = ops::upsample_bilinear2x(x);
  }
  x = ops::concat0({x, skips.layers[1]});
  return ops::conv2d(x, P("dec.final.w"), P("dec.final.b"), 1, 1);  // [1,H,W]
}

// Joint softmax over all K*H*W logits (default), or per-camera softmax for the
// late-fusion baseline / sensitivity knob. Returns one normalized [1,H,W] map
// per camera; jointly they sum to 1 (or to 1 per camera).
inline std::vector<Var> normalize_heatmaps(const PolicyConfig& cfg,
                                           const std::vector<Var>& logits) {
  std::vector<Var> maps;
  if (cfg.per_camera_softmax) {
    for (Var l : logits) maps.push_back(ops::softmax_all(l));
    return maps;
  }
  int H = logits[0].v().shape[1], W = logits[0].v().shape[2];
  std::vector<Var> flat;
  for (Var l : logits) flat.push_back(ops::reshape(l, {1, H * W}));
  Var joint = ops::softmax_rows(ops::concat_cols(flat));  // [1, K*H*W]
  for (int k = 0; k < static_cast<int>(logits.size()); ++k)
    maps.push_back(ops::reshape(ops::slice_cols(joint, k * H * W, H * W), {1, H, W}));
  return maps;
}

// Eq. 7 expectation of the world position under the heatmap distribution.
// With per-camera normalization each camera's expectation is averaged
// (late fusion of per-view predictions).
inline Var expected_position(const PolicyConfig& cfg, const std::vector<Var>& heatmaps,
                             const Observation& obs) {
  int HW = obs.H * obs.W;
  std::vector<Var> flats;
  for (Var m : heatmaps) flats.push_back(ops::reshape(m, {1, HW}));
  if (!cfg.per_camera_softmax) {
    Var b = ops::concat_cols(flats);  // [1, K*H*W], sums to 1
    return ops::weighted_sum_points(b, world_points(obs));
  }
  std::vector<Var> per_cam;
  for (int k = 0; k < obs.K; ++k) {
    auto pts = std::make_shared<Tensor>(Tensor({HW, 3}));
    for (int h = 0; h < obs.H; ++h)
      for (int w = 0; w < obs.W; ++w)
        for (int c = 0; c < 3; ++c)
          pts->at(h * obs.W + w, c) = obs.pcd[obs.rgb_index(k, c, h, w)];
    per_cam.push_back(ops::weighted_sum_points(flats[static_cast<size_t>(k)], pts));
  }
  return ops::scale(ops::addN(per_cam), 1.0 / obs.K);
}

// Pr(m) = Softmax(W_m . mean raw embedding).
inline Var task_logits(ParamGraph& P, const Tensor& mean_embed) {
  Var x = ops::constant_owned(P.graph(), mean_embed);  // [1, d_text]
  return ops::matmul(x, P("head.Wm"));
}

// p^o = sum_m Pr(m) * E_O(m, t): a soft, differentiable offset lookup.
inline Var predict_offset(ParamGraph& P, const PolicyConfig& cfg, Var pr_m, int step_slot) {
  if (step_slot < 0 || step_slot >= cfg.t_max)
    throw std::invalid_argument("predict_offset: step out of range");
  std::vector<Var> rows;
  for (int m = 0; m < cfg.n_tasks; ++m) {
    Var eo = ops::slice0(P("head.EO"), m * cfg.t_max + step_slot, 1);  // [1,3]
    Var w = ops::slice_cols(pr_m, m, 1);                               // [1,1]
    rows.push_back(ops::matmul(w, eo));
  }
  return ops::addN(rows);
}

struct RotationOut {
  Var quat;    // [1,4] raw
  Var open;    // [1,1] raw
  Var pooled;  // [1,64] pooled conv features (feeds the no-instruction offset)
};

// Two stride-2 convs (64 ch, GroupNorm + LeakyReLU) over the camera-stacked
// decoder input, average pool, linear layer to 5 outputs.
inline RotationOut rotation_gripper_head(ParamGraph& P, const PolicyConfig& cfg,
                                         const std::vector<Var>& h_maps) {
  Var x = ops::concat0(h_maps);  // [K*(d+16), hv, hv]
  x = ops::conv2d(x, P("rot.conv1.w"), P("rot.conv1.b"), 2, 1);
  x = ops::leaky_relu(ops::groupnorm(x, cfg.gn_groups, P("rot.gn1.gamma"),
                                     P("rot.gn1.beta")),
                      cfg.leaky_slope);
  x = ops::conv2d(x, P("rot.conv2.w"), P("rot.conv2.b"), 2, 1);
  x = ops::leaky_relu(ops::groupnorm(x, cfg.gn_groups, P("rot.gn2.gamma"),
                                     P("rot.gn2.beta")),
                      cfg.leaky_slope);
  Var pooled = ops::spatial_mean(x);  // [1,64]
  Var five = ops::add_row_broadcast(ops::matmul(pooled, P("rot.fc.w")), P("rot.fc.b"));
  RotationOut out;
  out.quat = ops::slice_cols(five, 0, 4);
  out.open = ops::slice_cols(five, 4, 1);
  out.pooled = pooled;
  return out;
}

}  // namespace tabletop
