#pragma once

#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "tabletop/train/trainer.hpp"

namespace tabletop {

// Plain-text training log: versioned header, one row per logged iteration.
inline void save_loss_log(const std::string& path, const std::vector<LogEntry>& log) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "tabletop-loss-log v1\n";
  f << "iteration total position rotation gripper ce\n";
  f << std::setprecision(17);
  for (const LogEntry& e : log)
    f << e.iteration << ' ' << e.loss.total << ' ' << e.loss.position << ' '
      << e.loss.rotation << ' ' << e.loss.gripper << ' ' << e.loss.ce << "\n";
}

inline std::vector<LogEntry> load_loss_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string header;
  std::getline(f, header);
  if (header != "tabletop-loss-log v1")
    throw std::runtime_error("loss log: unsupported header: " + header);
  std::getline(f, header);  // column names
  std::vector<LogEntry> log;
  LogEntry e;
  while (f >> e.iteration >> e.loss.total >> e.loss.position >> e.loss.rotation >>
         e.loss.gripper >> e.loss.ce)
    log.push_back(e);
  return log;
}

}  // namespace tabletop
