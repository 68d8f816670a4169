#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tabletop {

// Multi-camera observation. Arrays are [camera][channel][h][w], row-major.
// rgb in [0,1] (always an exact multiple of 1/255), pcd in world meters,
// gripper_map in {0,1}.
struct Observation {
  int K = 0, H = 0, W = 0;
  std::vector<float> rgb;          // K*3*H*W
  std::vector<float> pcd;          // K*3*H*W
  std::vector<float> gripper_map;  // K*H*W

  void allocate(int k, int h, int w) {
    K = k;
    H = h;
    W = w;
    rgb.assign(static_cast<size_t>(k) * 3 * h * w, 0.f);
    pcd.assign(static_cast<size_t>(k) * 3 * h * w, 0.f);
    gripper_map.assign(static_cast<size_t>(k) * h * w, 0.f);
  }

  size_t rgb_index(int k, int c, int h, int w) const {
    return ((static_cast<size_t>(k) * 3 + c) * H + h) * W + w;
  }
  size_t map_index(int k, int h, int w) const {
    return (static_cast<size_t>(k) * H + h) * W + w;
  }

  bool operator==(const Observation& o) const {
    return K == o.K && H == o.H && W == o.W && rgb == o.rgb && pcd == o.pcd &&
           gripper_map == o.gripper_map;
  }
};

// Macro-step action: gripper position, orientation quaternion (w,x,y,z),
// open/close flag. Stored single-precision so the on-disk container round-trips
// bit-exactly.
struct Action {
  float px = 0, py = 0, pz = 0;
  float qw = 1, qx = 0, qy = 0, qz = 0;
  float open = 1;

  std::vector<float> flat() const { return {px, py, pz, qw, qx, qy, qz, open}; }
  static Action from_flat(const float* v) {
    Action a;
    a.px = v[0]; a.py = v[1]; a.pz = v[2];
    a.qw = v[3]; a.qx = v[4]; a.qy = v[5]; a.qz = v[6];
    a.open = v[7];
    return a;
  }
  bool operator==(const Action& o) const {
    return px == o.px && py == o.py && pz == o.pz && qw == o.qw && qx == o.qx &&
           qy == o.qy && qz == o.qz && open == o.open;
  }
};

struct Episode {
  std::string instruction;
  std::string task_name;
  int task_id = 0;
  int variation_id = 0;
  int64_t seed = 0;
  std::vector<Observation> observations;  // length T
  std::vector<Action> actions;            // length T

  int steps() const { return static_cast<int>(actions.size()); }

  bool operator==(const Episode& o) const {
    return instruction == o.instruction && task_name == o.task_name &&
           task_id == o.task_id && variation_id == o.variation_id && seed == o.seed &&
           observations == o.observations && actions == o.actions;
  }
};

}  // namespace tabletop
