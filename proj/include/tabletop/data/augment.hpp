#pragma once

#include <algorithm>
#include <cmath>

#include "tabletop/core/rng.hpp"
#include "tabletop/data/types.hpp"

namespace tabletop {

struct AugmentOptions {
  bool jitter = true;       // multiplicative brightness jitter, RGB only
  bool crop = true;         // random 7/8 crop resized back to full resolution
  double jitter_lo = 0.9;
  double jitter_hi = 1.1;
  int crop_num = 7;         // crop side = H * crop_num / crop_den
  int crop_den = 8;
};

namespace detail {

// Bilinear resize of one [H,W] plane from a crop window back to [H,W].
// Source coordinates are mapped with half-pixel centers.
inline void resize_plane_bilinear(const float* src, int H, int W, int oy, int ox, int ch,
                                  int cw, float* dst) {
  for (int y = 0; y < H; ++y) {
    double sy = (y + 0.5) * ch / static_cast<double>(H) - 0.5;
    double cy = std::clamp(sy, 0.0, ch - 1.0);
    int y0 = static_cast<int>(std::floor(cy));
    int y1 = std::min(y0 + 1, ch - 1);
    double fy = cy - y0;
    for (int x = 0; x < W; ++x) {
      double sx = (x + 0.5) * cw / static_cast<double>(W) - 0.5;
      double cx = std::clamp(sx, 0.0, cw - 1.0);
      int x0 = static_cast<int>(std::floor(cx));
      int x1 = std::min(x0 + 1, cw - 1);
      double fx = cx - x0;
      double v00 = src[(oy + y0) * W + (ox + x0)];
      double v01 = src[(oy + y0) * W + (ox + x1)];
      double v10 = src[(oy + y1) * W + (ox + x0)];
      double v11 = src[(oy + y1) * W + (ox + x1)];
      double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
      dst[y * W + x] = static_cast<float>(v);
    }
  }
}

// Nearest-neighbour resize; keeps point clouds and the binary gripper map from
// being smeared across depth discontinuities.
inline void resize_plane_nearest(const float* src, int H, int W, int oy, int ox, int ch,
                                 int cw, float* dst) {
  for (int y = 0; y < H; ++y) {
    int cy = std::min(static_cast<int>((y + 0.5) * ch / static_cast<double>(H)), ch - 1);
    for (int x = 0; x < W; ++x) {
      int cx = std::min(static_cast<int>((x + 0.5) * cw / static_cast<double>(W)), cw - 1);
      dst[y * W + x] = src[(oy + cy) * W + (ox + cx)];
    }
  }
}

}  // namespace detail

// Photometric + geometric augmentation. One jitter factor and one crop window
// are drawn per call and applied identically to every camera; the crop window
// is shared across RGB, point cloud, and gripper map so the modalities stay
// pixel-aligned.
inline Observation augment(const Observation& in, Rng& rng,
                           const AugmentOptions& opts = {}) {
  Observation out = in;
  if (opts.jitter) {
    double f = rng.uniform(opts.jitter_lo, opts.jitter_hi);
    for (float& v : out.rgb)
      v = static_cast<float>(std::clamp(static_cast<double>(v) * f, 0.0, 1.0));
  }
  if (opts.crop) {
    int ch = in.H * opts.crop_num / opts.crop_den;
    int cw = in.W * opts.crop_num / opts.crop_den;
    int oy = rng.uniform_int(in.H - ch + 1);
    int ox = rng.uniform_int(in.W - cw + 1);
    Observation resized = out;
    for (int k = 0; k < in.K; ++k) {
      for (int c = 0; c < 3; ++c) {
        detail::resize_plane_bilinear(&out.rgb[out.rgb_index(k, c, 0, 0)], in.H, in.W, oy,
                                      ox, ch, cw, &resized.rgb[resized.rgb_index(k, c, 0, 0)]);
        detail::resize_plane_nearest(&out.pcd[out.rgb_index(k, c, 0, 0)], in.H, in.W, oy,
                                     ox, ch, cw, &resized.pcd[resized.rgb_index(k, c, 0, 0)]);
      }
      detail::resize_plane_nearest(&out.gripper_map[out.map_index(k, 0, 0)], in.H, in.W,
                                   oy, ox, ch, cw,
                                   &resized.gripper_map[resized.map_index(k, 0, 0)]);
    }
    out = resized;
  }
  return out;
}

}  // namespace tabletop
