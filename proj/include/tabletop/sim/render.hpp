#pragma once

#include <cmath>
#include <limits>

#include "tabletop/data/types.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop {

namespace detail {

// Slab-method ray/AABB intersection; returns entry distance or +inf.
inline double ray_box(const Vec3& origin, const Vec3& dir, const Vec3& lo, const Vec3& hi) {
  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  const double l[3] = {lo.x, lo.y, lo.z};
  const double h[3] = {hi.x, hi.y, hi.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] < l[a] || o[a] > h[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t0 = (l[a] - o[a]) / d[a];
    double t1 = (h[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return std::numeric_limits<double>::infinity();
  }
  return tmin;
}

}  // namespace detail

// Software ray-cast rendering of axis-aligned colored boxes over a gray table
// plane. Produces pixel-aligned RGB / point-cloud / gripper-map arrays.
// Pressed state is deliberately not rendered.
inline Observation render(const Scene& scene, const CameraRig& rig) {
  Observation obs;
  int K = rig.count();
  int H = rig.cams[0].height, W = rig.cams[0].width;
  obs.allocate(K, H, W);

  for (int k = 0; k < K; ++k) {
    const Camera& cam = rig.cams[k];
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        Vec3 dir = cam.pixel_ray(u, v);
        double best_t = std::numeric_limits<double>::infinity();
        Color color{0, 0, 0};
        // table plane z=0 bounded by table_half
        if (std::abs(dir.z) > 1e-12) {
          double t = -cam.eye.z / dir.z;
          if (t > 0) {
            Vec3 p = cam.eye + dir * t;
            if (std::abs(p.x) <= scene.table_half && std::abs(p.y) <= scene.table_half) {
              best_t = t;
              color = kTableColor;
            }
          }
        }
        for (const Object& o : scene.objects) {
          Vec3 lo{o.pos.x - o.half(0), o.pos.y - o.half(1), o.pos.z - o.half(2)};
          Vec3 hi{o.pos.x + o.half(0), o.pos.y + o.half(1), o.pos.z + o.half(2)};
          double t = detail::ray_box(cam.eye, dir, lo, hi);
          if (t < best_t) {
            best_t = t;
            color = o.color;
          }
        }
        double t = std::isfinite(best_t) ? best_t : sim::kBackgroundDepth;
        Vec3 p = cam.eye + dir * t;
        obs.rgb[obs.rgb_index(k, 0, v, u)] = static_cast<float>(color.r) / 255.0f;
        obs.rgb[obs.rgb_index(k, 1, v, u)] = static_cast<float>(color.g) / 255.0f;
        obs.rgb[obs.rgb_index(k, 2, v, u)] = static_cast<float>(color.b) / 255.0f;
        obs.pcd[obs.rgb_index(k, 0, v, u)] = static_cast<float>(p.x);
        obs.pcd[obs.rgb_index(k, 1, v, u)] = static_cast<float>(p.y);
        obs.pcd[obs.rgb_index(k, 2, v, u)] = static_cast<float>(p.z);
      }
    }
    // binary proprioception map: one hot pixel at the gripper projection
    auto pr = cam.project(scene.gripper_pose);
    if (pr[2] > 0) {
      int u = static_cast<int>(std::lround(pr[0]));
      int v = static_cast<int>(std::lround(pr[1]));
      if (u >= 0 && u < W && v >= 0 && v < H)
        obs.gripper_map[obs.map_index(k, v, u)] = 1.0f;
    }
  }
  return obs;
}

}  // namespace tabletop
