#pragma once

#include <cmath>
#include <stdexcept>

#include "tabletop/data/types.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop {

namespace detail {
inline double horizontal_dist(const Vec3& a, const Vec3& b) {
  double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}
}  // namespace detail

// Kinematic macro-step transition. The gripper teleports to the action target;
// grasp/press/stack effects are applied in a fixed order so episodes replay
// deterministically.
inline Scene step(const Scene& scene, const Action& action) {
  if (!std::isfinite(action.px) || !std::isfinite(action.py) || !std::isfinite(action.pz))
    throw std::invalid_argument("step: non-finite action position");
  double qn = std::sqrt(static_cast<double>(action.qw) * action.qw +
                        static_cast<double>(action.qx) * action.qx +
                        static_cast<double>(action.qy) * action.qy +
                        static_cast<double>(action.qz) * action.qz);
  if (std::abs(qn - 1.0) > 1e-3)
    throw std::invalid_argument("step: quaternion not unit norm");

  Scene s = scene;
  s.clamped = false;
  Vec3 target{action.px, action.py, action.pz};
  double lim = s.table_half;
  if (target.x < -lim || target.x > lim || target.y < -lim || target.y > lim ||
      target.z < 0.0 || target.z > 1.0) {
    target.x = std::clamp(target.x, -lim, lim);
    target.y = std::clamp(target.y, -lim, lim);
    target.z = std::clamp(target.z, 0.0, 1.0);
    s.clamped = true;
  }
  s.gripper_pose = target;
  if (s.held_object >= 0) s.find_id(s.held_object)->pos = target;

  bool want_open = action.open >= 0.5f;
  if (!want_open && s.gripper_open && s.held_object < 0) {
    // closing: attach the nearest cube within the grasp radius
    int best = -1;
    double best_d = sim::kGraspRadius;
    for (const Object& o : s.objects) {
      if (o.shape != Shape::kCube || o.role == Role::kObstacle) continue;
      double d = (o.pos - target).norm();
      if (d <= best_d) {
        best_d = d;
        best = o.id;
      }
    }
    if (best >= 0) {
      s.held_object = best;
      s.find_id(best)->pos = target;
    }
  } else if (want_open && !s.gripper_open && s.held_object >= 0) {
    // opening: the held cube drops straight down onto its highest support
    Object* cube = s.find_id(s.held_object);
    double support = 0.0;
    for (const Object& o : s.objects) {
      if (o.id == cube->id) continue;
      if (std::abs(o.pos.x - cube->pos.x) <= o.half(0) + cube->half(0) &&
          std::abs(o.pos.y - cube->pos.y) <= o.half(1) + cube->half(1) &&
          o.top() <= cube->pos.z + cube->half(2) + 1e-9)
        support = std::max(support, o.top());
    }
    cube->pos.z = support + cube->half(2);
    s.held_object = -1;
  }
  s.gripper_open = want_open;

  // press detection: nearest button within the press radius while the gripper
  // is down at table level
  int pressed = -1;
  double best_d = sim::kPressRadius;
  for (const Object& o : s.objects) {
    if (o.shape != Shape::kButton || o.role == Role::kMarker || o.role == Role::kObstacle)
      continue;
    if (s.gripper_pose.z > o.top() + 0.01) continue;
    double d = detail::horizontal_dist(o.pos, s.gripper_pose);
    if (d <= best_d) {
      best_d = d;
      pressed = o.id;
    }
  }
  if (pressed >= 0) s.pressed_sequence.push_back(pressed);
  return s;
}

// Scripted expert emitting macro-step actions only.
inline std::vector<Action> expert_demo(const Scene& scene, const TaskSpec& task) {
  auto require_color = [&](const std::string& c) -> const Object& {
    const Object* o = scene.find_color(c);
    if (!o) throw std::runtime_error("expert_demo: goal object missing: " + c);
    return *o;
  };
  std::vector<Action> actions;
  auto push = [&](Vec3 p, bool open) {
    Action a;
    a.px = static_cast<float>(p.x);
    a.py = static_cast<float>(p.y);
    a.pz = static_cast<float>(p.z);
    a.qw = 1;
    a.open = open ? 1.0f : 0.0f;
    actions.push_back(a);
  };
  switch (task.name) {
    case TaskName::kReachTarget: {
      const Object& t = require_color(task.goal[0]);
      push(t.pos, true);
      break;
    }
    case TaskName::kPushButtons: {
      for (const std::string& c : task.goal) {
        const Object& b = require_color(c);
        push(b.pos, true);
      }
      break;
    }
    case TaskName::kTower: {
      const Object* pad = nullptr;
      for (const Object& o : scene.objects)
        if (o.role == Role::kMarker) pad = &o;
      if (!pad) throw std::runtime_error("expert_demo: tower pad missing");
      double stack_top = pad->top();
      for (const std::string& c : task.goal) {
        const Object& cube = require_color(c);
        push(cube.pos, false);                                       // grasp
        push({pad->pos.x, pad->pos.y, stack_top + cube.half(2)}, true);  // place
        stack_top += cube.height;
      }
      break;
    }
  }
  if (static_cast<int>(actions.size()) > sim::kMaxSteps)
    throw std::runtime_error("expert_demo: exceeds T_max");
  return actions;
}

// Pure success predicate.
inline bool check_success(const Scene& scene, const TaskSpec& task) {
  switch (task.name) {
    case TaskName::kReachTarget: {
      const Object* t = scene.find_color(task.goal[0]);
      if (!t) return false;
      return (t->pos - scene.gripper_pose).norm() <= sim::kPressRadius;
    }
    case TaskName::kPushButtons: {
      // pressed sequence must equal the goal order exactly (no extra presses)
      if (scene.pressed_sequence.size() != task.goal.size()) return false;
      for (size_t i = 0; i < task.goal.size(); ++i) {
        const Object* o = scene.find_id(scene.pressed_sequence[i]);
        if (!o || o->color_name != task.goal[i]) return false;
      }
      return true;
    }
    case TaskName::kTower: {
      const Object* pad = nullptr;
      for (const Object& o : scene.objects)
        if (o.role == Role::kMarker) pad = &o;
      if (!pad) return false;
      double expect_base = pad->top();
      for (size_t i = 0; i < task.goal.size(); ++i) {
        const Object* c = scene.find_color(task.goal[i]);
        if (!c) return false;
        if (detail::horizontal_dist(c->pos, pad->pos) > sim::kPressRadius) return false;
        double expect_z = expect_base + c->half(2);
        if (std::abs(c->pos.z - expect_z) > c->height * 0.5) return false;
        expect_base += c->height;
      }
      return true;
    }
  }
  return false;
}

}  // namespace tabletop
