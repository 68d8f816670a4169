#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabletop/core/rng.hpp"
#include "tabletop/sim/geometry.hpp"

namespace tabletop {

namespace sim {
inline constexpr double kTableHalf = 0.4;        // table is [-0.4, 0.4]^2 at z=0
inline constexpr double kButtonSize = 0.10;      // footprint
inline constexpr double kButtonHeight = 0.02;
inline constexpr double kCubeSize = 0.06;
inline constexpr double kPadSize = 0.10;
inline constexpr double kPadHeight = 0.01;
inline constexpr double kPressRadius = 0.4 * kButtonSize;  // eps_p
inline constexpr double kGraspRadius = 0.5 * kCubeSize;    // eps_g
inline constexpr int kMaxSteps = 6;                        // T_max
inline constexpr double kGripperHomeZ = 0.35;
inline constexpr double kBackgroundDepth = 2.5;
}  // namespace sim

struct Color {
  uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Color& o) const { return r == o.r && g == o.g && b == o.b; }
};

struct PaletteEntry {
  const char* name;
  Color color;
};

// Goal-eligible colors. Indices are stable; variation enumerations depend on them.
inline const std::vector<PaletteEntry>& palette() {
  static const std::vector<PaletteEntry> p = {
      {"red", {255, 0, 0}},      {"green", {0, 200, 0}},   {"blue", {0, 0, 255}},
      {"yellow", {255, 255, 0}}, {"magenta", {255, 0, 255}}, {"cyan", {0, 255, 255}},
      {"orange", {255, 128, 0}}, {"purple", {128, 0, 255}}, {"white", {255, 255, 255}},
  };
  return p;
}

inline int palette_index(const std::string& name) {
  const auto& p = palette();
  for (size_t i = 0; i < p.size(); ++i)
    if (name == p[i].name) return static_cast<int>(i);
  return -1;
}

inline const Color kTableColor{128, 128, 128};
inline const Color kObstacleColor{64, 64, 64};

enum class TaskName { kReachTarget, kPushButtons, kTower };

inline const char* task_name_str(TaskName t) {
  switch (t) {
    case TaskName::kReachTarget: return "reach_target";
    case TaskName::kPushButtons: return "push_buttons";
    case TaskName::kTower: return "tower";
  }
  return "?";
}

inline TaskName parse_task_name(const std::string& s) {
  if (s == "reach_target") return TaskName::kReachTarget;
  if (s == "push_buttons") return TaskName::kPushButtons;
  if (s == "tower") return TaskName::kTower;
  throw std::invalid_argument("unknown task name: " + s);
}

inline constexpr int kNumTasks = 3;  // N_tau

namespace detail {
// Enumerates ordered k-subsets of palette colors: all singles first, then all
// ordered pairs, then ordered triples (factorial-number-system ranking).
inline std::vector<int> ordered_subset_for_variation(int variation, int min_len) {
  int n = static_cast<int>(palette().size());
  std::vector<int> lens;
  for (int len = min_len; len <= 3; ++len) lens.push_back(len);
  int v = variation;
  for (int len : lens) {
    int count = 1;
    for (int i = 0; i < len; ++i) count *= (n - i);
    if (v < count) {
      std::vector<int> avail(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) avail[static_cast<size_t>(i)] = i;
      std::vector<int> out;
      int rem = v;
      for (int i = 0; i < len; ++i) {
        int radix = 1;
        for (int j = i + 1; j < len; ++j) radix *= (n - j);
        int idx = rem / radix;
        rem %= radix;
        out.push_back(avail[static_cast<size_t>(idx)]);
        avail.erase(avail.begin() + idx);
      }
      return out;
    }
    v -= count;
  }
  throw std::invalid_argument("variation id out of range");
}
}  // namespace detail

struct TaskSpec {
  TaskName name = TaskName::kReachTarget;
  int variation_id = 0;
  std::vector<std::string> goal;  // ordered color names
  int task_index = 0;             // m* in [0, kNumTasks)

  static TaskSpec make(TaskName name, int variation) {
    TaskSpec t;
    t.name = name;
    t.variation_id = variation;
    t.task_index = static_cast<int>(name);
    std::vector<int> idx;
    switch (name) {
      case TaskName::kReachTarget:
        idx = {variation % static_cast<int>(palette().size())};
        break;
      case TaskName::kPushButtons:
        idx = detail::ordered_subset_for_variation(variation, 1);
        break;
      case TaskName::kTower:
        idx = detail::ordered_subset_for_variation(variation, 2);
        break;
    }
    for (int i : idx) t.goal.push_back(palette()[static_cast<size_t>(i)].name);
    return t;
  }
};

enum class Shape { kButton, kCube };
enum class Role { kGoal, kDistractor, kMarker, kObstacle };

struct Object {
  int id = 0;
  Shape shape = Shape::kButton;
  Role role = Role::kGoal;
  Color color;
  Vec3 pos;        // center of the box
  double size = 0;   // footprint edge length
  double height = 0; // box height
  std::string color_name;

  double top() const { return pos.z + height * 0.5; }
  double half(int axis) const { return axis == 2 ? height * 0.5 : size * 0.5; }
};

struct SimOptions {
  // When true the scene contains exactly the goal objects (no distractors).
  bool exact_scene = false;
  // When true, an obstacle is placed so the first goal object is hidden from
  // one camera of the standard rig (chosen per seed).
  bool occluders = false;
};

// Immutable world state between macro steps.
struct Scene {
  std::vector<Object> objects;
  Vec3 gripper_pose;
  bool gripper_open = true;
  int held_object = -1;               // object id or -1
  std::vector<int> pressed_sequence;  // object ids in press order
  bool clamped = false;               // last step requested an out-of-bounds target
  double table_half = sim::kTableHalf;
  int64_t rng_seed = 0;
  int occluded_camera = -1;  // rig camera hidden from the first goal object, or -1

  const Object* find_color(const std::string& name) const {
    for (const Object& o : objects)
      if (o.color_name == name && (o.role == Role::kGoal || o.role == Role::kDistractor))
        return &o;
    return nullptr;
  }
  Object* find_id(int id) {
    for (Object& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }
  const Object* find_id(int id) const {
    for (const Object& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }
};

inline Scene make_scene(const TaskSpec& task, int64_t seed, int image_h, int image_w,
                        const SimOptions& opts = {}) {
  if (image_h % 16 != 0 || image_w % 16 != 0)
    throw std::invalid_argument("image size must be a multiple of 16");
  if (task.goal.empty() || task.goal.size() > 3)
    throw std::invalid_argument("goal must have 1..3 colors");
  for (const std::string& c : task.goal)
    if (palette_index(c) < 0) throw std::invalid_argument("unknown goal color: " + c);

  Rng rng(mix_seed(0x5ce4e5u, static_cast<uint64_t>(task.name),
                   static_cast<uint64_t>(task.variation_id),
                   static_cast<uint64_t>(seed)));
  Scene s;
  s.rng_seed = seed;
  s.gripper_pose = {0, 0, sim::kGripperHomeZ};
  s.gripper_open = true;

  // Colors: goal colors first, then distinct distractor colors.
  std::vector<int> color_ids;
  for (const std::string& c : task.goal) color_ids.push_back(palette_index(c));
  size_t want = opts.exact_scene ? task.goal.size() : std::max<size_t>(3, task.goal.size());
  std::vector<int> others;
  for (int i = 0; i < static_cast<int>(palette().size()); ++i)
    if (std::find(color_ids.begin(), color_ids.end(), i) == color_ids.end())
      others.push_back(i);
  rng.shuffle(others);
  while (color_ids.size() < want && !others.empty()) {
    color_ids.push_back(others.back());
    others.pop_back();
  }

  Shape shape = task.name == TaskName::kTower ? Shape::kCube : Shape::kButton;
  double margin = 0.12;
  double min_dist = 0.18;
  auto place = [&](double z_half) -> Vec3 {
    for (int attempt = 0; attempt < 2000; ++attempt) {
      Vec3 p{rng.uniform(-s.table_half + margin, s.table_half - margin),
             rng.uniform(-s.table_half + margin, s.table_half - margin), z_half};
      bool ok = true;
      for (const Object& o : s.objects) {
        double dx = p.x - o.pos.x, dy = p.y - o.pos.y;
        if (std::sqrt(dx * dx + dy * dy) < min_dist) ok = false;
      }
      if (ok) return p;
    }
    throw std::runtime_error("make_scene: could not place objects");
  };

  int next_id = 0;
  for (size_t i = 0; i < color_ids.size(); ++i) {
    Object o;
    o.id = next_id++;
    o.shape = shape;
    o.role = i < task.goal.size() ? Role::kGoal : Role::kDistractor;
    o.color = palette()[static_cast<size_t>(color_ids[i])].color;
    o.color_name = palette()[static_cast<size_t>(color_ids[i])].name;
    if (shape == Shape::kButton) {
      o.size = sim::kButtonSize;
      o.height = sim::kButtonHeight;
    } else {
      o.size = sim::kCubeSize;
      o.height = sim::kCubeSize;
    }
    o.pos = place(o.height * 0.5);
    s.objects.push_back(o);
  }

  if (task.name == TaskName::kTower) {
    Object pad;
    pad.id = next_id++;
    pad.shape = Shape::kButton;
    pad.role = Role::kMarker;
    pad.color = {220, 220, 220};
    pad.color_name = "pad";
    pad.size = sim::kPadSize;
    pad.height = sim::kPadHeight;
    pad.pos = place(pad.height * 0.5);
    s.objects.push_back(pad);
  }

  if (opts.occluders) {
    const Object& target = s.objects[0];
    int cam = rng.uniform_int(3);
    s.occluded_camera = cam;
    Object w;
    w.id = next_id++;
    w.shape = Shape::kCube;
    w.role = Role::kObstacle;
    w.color = kObstacleColor;
    w.color_name = "gray";
    if (cam == 0) {
      // slab floating between the top-down camera (eye at (0,0,1.1)) and the
      // target, centered on the line of sight so off-center targets stay hidden
      w.size = 0.16;
      w.height = 0.02;
      double lam = (1.1 - 0.28) / (1.1 - target.top());
      w.pos = {lam * target.pos.x, lam * target.pos.y, 0.28};
    } else {
      // thin tall wall between the side camera and the target
      double side = cam == 1 ? -1.0 : 1.0;
      w.size = 0.18;
      w.height = 0.22;
      w.pos = {target.pos.x + side * 0.14, target.pos.y, 0.11};
    }
    s.objects.push_back(w);
  }
  return s;
}

}  // namespace tabletop
