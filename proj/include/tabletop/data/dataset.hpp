#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabletop/data/episode_io.hpp"
#include "tabletop/data/types.hpp"
#include "tabletop/lang/instructions.hpp"
#include "tabletop/sim/render.hpp"
#include "tabletop/sim/world.hpp"

namespace tabletop {

struct DatasetConfig {
  std::string dir;
  std::vector<TaskName> tasks{TaskName::kReachTarget};
  std::vector<int> variations{0};
  int episodes_per_variation = 10;
  uint64_t seed = 0;        // base seed; episode seeds derive from it
  int image_hw = 32;
  int cameras = 3;          // rendered count is fixed by the rig; must be 3
  SimOptions sim;
  int template_id = -1;     // -1: sample a template per episode; >=0: fixed
};

// Generates a single successful demonstration episode entirely in memory.
// Observations are captured before each macro step (teacher-forcing layout).
inline Episode generate_episode(const TaskSpec& task, int64_t scene_seed, int image_hw,
                                const SimOptions& opts, const std::string& instruction) {
  Scene s = make_scene(task, scene_seed, image_hw, image_hw, opts);
  CameraRig rig = CameraRig::standard(image_hw, image_hw);
  Episode e;
  e.instruction = instruction;
  e.task_name = task_name_str(task.name);
  e.task_id = task.task_index;
  e.variation_id = task.variation_id;
  e.seed = scene_seed;
  std::vector<Action> demo = expert_demo(s, task);
  for (const Action& a : demo) {
    e.observations.push_back(render(s, rig));
    e.actions.push_back(a);
    s = step(s, a);
  }
  if (!check_success(s, task))
    throw std::runtime_error("generate_episode: expert failed on " +
                             std::string(task_name_str(task.name)) + " variation " +
                             std::to_string(task.variation_id) + " seed " +
                             std::to_string(scene_seed));
  return e;
}

struct ManifestEntry {
  std::string file;
  std::string task_name;
  int task_id = 0;
  int variation_id = 0;
  int64_t seed = 0;
  int steps = 0;
  std::string instruction;
};

struct Manifest {
  int image_hw = 0;
  int cameras = 0;
  uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
};

inline void save_manifest(const std::string& path, const Manifest& m) {
  nlohmann::json j;
  j["format"] = "tabletop-dataset-v1";
  j["image_hw"] = m.image_hw;
  j["cameras"] = m.cameras;
  j["seed"] = m.seed;
  j["episodes"] = nlohmann::json::array();
  for (const ManifestEntry& e : m.entries) {
    j["episodes"].push_back({{"file", e.file},
                             {"task", e.task_name},
                             {"task_id", e.task_id},
                             {"variation", e.variation_id},
                             {"seed", e.seed},
                             {"steps", e.steps},
                             {"instruction", e.instruction}});
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write manifest: " + path);
  f << j.dump(2) << "\n";
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ContainerError("cannot read manifest: " + path);
  nlohmann::json j;
  f >> j;
  if (j.value("format", "") != "tabletop-dataset-v1")
    throw ContainerError("manifest: unknown format field");
  Manifest m;
  m.image_hw = j.at("image_hw").get<int>();
  m.cameras = j.at("cameras").get<int>();
  m.seed = j.at("seed").get<uint64_t>();
  for (const auto& je : j.at("episodes")) {
    ManifestEntry e;
    e.file = je.at("file").get<std::string>();
    e.task_name = je.at("task").get<std::string>();
    e.task_id = je.at("task_id").get<int>();
    e.variation_id = je.at("variation").get<int>();
    e.seed = je.at("seed").get<int64_t>();
    e.steps = je.at("steps").get<int>();
    e.instruction = je.at("instruction").get<std::string>();
    m.entries.push_back(e);
  }
  return m;
}

// Builds a dataset directory: one container file per episode plus
// manifest.json. Fully deterministic in DatasetConfig.
inline Manifest build_dataset(const DatasetConfig& cfg) {
  if (cfg.cameras != 3)
    throw std::invalid_argument("build_dataset: standard rig has 3 cameras");
  std::filesystem::create_directories(cfg.dir);
  Manifest m;
  m.image_hw = cfg.image_hw;
  m.cameras = cfg.cameras;
  m.seed = cfg.seed;
  int index = 0;
  for (TaskName task : cfg.tasks) {
    for (int variation : cfg.variations) {
      TaskSpec spec = TaskSpec::make(task, variation);
      for (int i = 0; i < cfg.episodes_per_variation; ++i) {
        int64_t scene_seed = static_cast<int64_t>(
            mix_seed(cfg.seed, static_cast<uint64_t>(task),
                     static_cast<uint64_t>(variation), static_cast<uint64_t>(i)));
        std::string instruction;
        if (cfg.template_id >= 0) {
          instruction = instruction_for(spec, cfg.template_id);
        } else {
          Rng irng(mix_seed(cfg.seed ^ 0x9e3779b9u, static_cast<uint64_t>(task),
                            static_cast<uint64_t>(variation), static_cast<uint64_t>(i)));
          instruction = generate_instruction(spec, irng);
        }
        Episode e = generate_episode(spec, scene_seed, cfg.image_hw, cfg.sim, instruction);
        char name[32];
        std::snprintf(name, sizeof(name), "ep_%05d.tbep", index++);
        save_episode((std::filesystem::path(cfg.dir) / name).string(), e);
        ManifestEntry me;
        me.file = name;
        me.task_name = e.task_name;
        me.task_id = e.task_id;
        me.variation_id = e.variation_id;
        me.seed = e.seed;
        me.steps = e.steps();
        me.instruction = e.instruction;
        m.entries.push_back(me);
      }
    }
  }
  save_manifest((std::filesystem::path(cfg.dir) / "manifest.json").string(), m);
  return m;
}

// In-memory dataset view used by the trainer and eval harness.
struct Dataset {
  Manifest manifest;
  std::vector<Episode> episodes;

  static Dataset load(const std::string& dir) {
    Dataset d;
    d.manifest = load_manifest((std::filesystem::path(dir) / "manifest.json").string());
    for (const ManifestEntry& e : d.manifest.entries)
      d.episodes.push_back(load_episode((std::filesystem::path(dir) / e.file).string()));
    return d;
  }

  // Partition by variation id: entries whose variation appears in
  // `unseen_variations` form the held-out split.
  std::pair<std::vector<int>, std::vector<int>> split_by_variation(
      const std::vector<int>& unseen_variations) const {
    std::vector<int> seen, unseen;
    for (size_t i = 0; i < episodes.size(); ++i) {
      bool held = false;
      for (int v : unseen_variations)
        if (episodes[i].variation_id == v) held = true;
      (held ? unseen : seen).push_back(static_cast<int>(i));
    }
    return {seen, unseen};
  }
};

}  // namespace tabletop
