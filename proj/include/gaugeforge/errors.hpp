#pragma once

#include <stdexcept>
#include <string>

namespace gaugeforge {

// Bad user input: malformed config, invalid sizes, missing files.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative solver failed to reach its tolerance.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A smallness monitor was violated during gauge construction.
struct MonitorError : std::runtime_error {
  MonitorError(std::string monitor_name, int stage_index, const std::string& what)
      : std::runtime_error(what), monitor(std::move(monitor_name)), stage(stage_index) {}
  std::string monitor;
  int stage;
};

// Filesystem / serialization failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gaugeforge
