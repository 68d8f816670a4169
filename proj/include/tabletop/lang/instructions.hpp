#pragma once

#include <string>
#include <vector>

#include "tabletop/core/rng.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop {

namespace detail {
inline std::string join_commas(const std::vector<std::string>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += v[i];
  }
  return out;
}
}  // namespace detail

// Renders every instruction template for a task instance. Template 0 is the
// canonical phrasing; the others are paraphrases used to test that conditioning
// survives surface variation.
inline std::vector<std::string> instruction_templates(const TaskSpec& task) {
  const std::vector<std::string>& g = task.goal;
  std::vector<std::string> out;
  switch (task.name) {
    case TaskName::kReachTarget:
      out.push_back("reach the " + g[0] + " target");
      out.push_back("touch the " + g[0] + " target");
      out.push_back("move the gripper to the " + g[0] + " target");
      break;
    case TaskName::kPushButtons: {
      std::string a = "push the " + g[0] + " button";
      for (size_t i = 1; i < g.size(); ++i)
        a += ", and then push the " + g[i] + " one";
      out.push_back(a);
      std::string b = "press the " + g[0] + " button";
      for (size_t i = 1; i < g.size(); ++i) b += ", then the " + g[i] + " one";
      out.push_back(b);
      std::string c = "hit the " + g[0] + " button";
      for (size_t i = 1; i < g.size(); ++i)
        c += ", afterwards hit the " + g[i] + " one";
      out.push_back(c);
      break;
    }
    case TaskName::kTower:
      out.push_back("Stack the " + detail::join_commas(g) + " blocks");
      out.push_back("build a tower from the " + detail::join_commas(g) + " cubes");
      out.push_back("pile up the " + detail::join_commas(g) + " blocks in that order");
      break;
  }
  return out;
}

inline std::string instruction_for(const TaskSpec& task, int template_id) {
  std::vector<std::string> t = instruction_templates(task);
  return t[static_cast<size_t>(template_id) % t.size()];
}

inline std::string generate_instruction(const TaskSpec& task, Rng& rng) {
  std::vector<std::string> t = instruction_templates(task);
  return t[static_cast<size_t>(rng.uniform_int(static_cast<int>(t.size())))];
}

}  // namespace tabletop
