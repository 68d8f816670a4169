#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "tabletop/model/config.hpp"
#include "tabletop/train/trainer.hpp"

namespace tabletop {

// Flat declarative key=value configuration. Lines are `key = value`; blank
// lines and `#` comments are ignored. Every key must be consumed by a known
// field — leftovers are reported with the offending key.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    ConfigMap m;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::string t = trim(line);
      if (t.empty()) continue;
      size_t eq = t.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": expected key = value, got: " + t);
      m.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return m;
  }

  // `key=value` override (CLI --set flag).
  void set_override(const std::string& kv) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must be key=value, got: " + kv);
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  void set(const std::string& key, const std::string& value) {
    if (key.empty()) throw std::invalid_argument("config: empty key");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
  }
  int integer(const std::string& key, int fallback) {
    return parse<int>(key, fallback, "integer");
  }
  double real(const std::string& key, double fallback) {
    return parse<double>(key, fallback, "number");
  }
  uint64_t unsigned64(const std::string& key, uint64_t fallback) {
    return parse<uint64_t>(key, fallback, "unsigned integer");
  }
  bool boolean(const std::string& key, bool fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::invalid_argument("config key '" + key + "': expected true/false, got '" +
                                it->second + "'");
  }

  // Throws if any key was never consumed (typo detection).
  void finish() const {
    for (const auto& [k, v] : values_)
      if (consumed_.count(k) == 0)
        throw std::invalid_argument("config: unknown key '" + k + "'");
  }

 private:
  template <typename T>
  T parse(const std::string& key, T fallback, const char* what) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    std::istringstream is(it->second);
    T v;
    is >> v;
    if (!is || !is.eof())
      throw std::invalid_argument("config key '" + key + "': expected " +
                                  std::string(what) + ", got '" + it->second + "'");
    return v;
  }

  static std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

// Documented keys: every PolicyConfig field under its own name.
inline PolicyConfig policy_config_from(ConfigMap& m) {
  PolicyConfig c;
  c.image_hw = m.integer("image_hw", c.image_hw);
  c.cameras = m.integer("cameras", c.cameras);
  c.d = m.integer("d", c.d);
  c.d_text = m.integer("d_text", c.d_text);
  c.d_v = m.integer("d_v", c.d_v);
  c.layers = m.integer("layers", c.layers);
  c.heads = m.integer("heads", c.heads);
  c.ffn_mult = m.integer("ffn_mult", c.ffn_mult);
  c.t_max = m.integer("t_max", c.t_max);
  c.n_tasks = m.integer("n_tasks", c.n_tasks);
  c.n_max_text = m.integer("n_max_text", c.n_max_text);
  c.leaky_slope = m.real("leaky_slope", c.leaky_slope);
  c.gn_groups = m.integer("gn_groups", c.gn_groups);
  c.use_transformer = m.boolean("use_transformer", c.use_transformer);
  std::string tok = m.str("token_mode", c.token_mode == TokenMode::kPatch ? "patch" : "channel");
  if (tok == "patch") c.token_mode = TokenMode::kPatch;
  else if (tok == "channel") c.token_mode = TokenMode::kChannel;
  else throw std::invalid_argument("config key 'token_mode': expected patch|channel, got '" + tok + "'");
  std::string attn = m.str("attn_mode", c.attn_mode == AttnMode::kCross ? "cross" : "self");
  if (attn == "cross") c.attn_mode = AttnMode::kCross;
  else if (attn == "self") c.attn_mode = AttnMode::kSelf;
  else throw std::invalid_argument("config key 'attn_mode': expected cross|self, got '" + attn + "'");
  c.use_pointcloud = m.boolean("use_pointcloud", c.use_pointcloud);
  c.use_gripper_map = m.boolean("use_gripper_map", c.use_gripper_map);
  c.include_history = m.boolean("include_history", c.include_history);
  c.include_instruction = m.boolean("include_instruction", c.include_instruction);
  c.use_masking = m.boolean("use_masking", c.use_masking);
  c.per_camera_softmax = m.boolean("per_camera_softmax", c.per_camera_softmax);
  c.text_encoder = m.str("text_encoder", c.text_encoder);
  return c;
}

// Documented keys: every TrainConfig field under its own name.
inline TrainConfig train_config_from(ConfigMap& m) {
  TrainConfig t;
  t.learning_rate = m.real("learning_rate", t.learning_rate);
  t.batch_size = m.integer("batch_size", t.batch_size);
  t.iterations = m.integer("iterations", t.iterations);
  t.mask_prob = m.real("mask_prob", t.mask_prob);
  t.mask_fraction = m.real("mask_fraction", t.mask_fraction);
  t.seed = m.unsigned64("seed", t.seed);
  t.augment = m.boolean("augment", t.augment);
  t.log_every = m.integer("log_every", t.log_every);
  t.checkpoint_every = m.integer("checkpoint_every", t.checkpoint_every);
  t.checkpoint_path = m.str("checkpoint_path", t.checkpoint_path);
  return t;
}

}  // namespace tabletop
