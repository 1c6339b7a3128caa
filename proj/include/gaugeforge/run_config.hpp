#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gaugeforge::config {

struct OmegaConfig {
  std::string kind = "random";  // zero | constant | random
  std::uint64_t seed = 1;
  double target_norm = 0.05;
  int smoothness_passes = 2;
  std::vector<double> sweep_norms;  // gauge sweep mode: one pipeline per norm
};

struct BoundaryConfig {
  std::string kind = "trig";  // linear | trig | file
  std::string file;           // CSV of stacked boundary values, kind = file
};

struct SolverConfig {
  double tol = 1e-10;        // linear solves (companion frame, states)
  double newton_tol = 1e-9;  // Newton target, relative to max(1, ||omega||)
  int steps = 8;             // continuation stages
  int newton_max = 20;       // Newton iterations per stage
};

struct MonitorConfig {
  double eps0 = 0.1;  // gradient-energy threshold
  double eps1 = 0.5;  // second-order proxy threshold
};

struct ExperimentConfig {
  double lambda = 0.5;
  // Flattened groups of m; the default covers the m = 3 half-ball.
  std::vector<double> centers = {0,     0, 0, 0.25, 0,    0, -0.25, 0,
                                 0,     0, 0.25,    0,    0, 0,     -0.25};
  std::vector<double> radii = {0.25, 0.125};
  std::vector<double> exponents;  // empty = module defaults
};

struct RunConfig {
  int m = 3;
  int n = 3;
  int N = 33;
  OmegaConfig omega;
  BoundaryConfig boundary;
  SolverConfig solver;
  MonitorConfig monitors;
  ExperimentConfig experiment;
  std::string output_dir = "out";
};

// Plain-text key/value manifest: one `key = value` per line, `#` comments,
// dotted keys (`omega.kind`), values as numbers, strings (quoted or bare),
// or numeric arrays (`[0.25, 0.125]`). Unknown keys are rejected.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);  // IoError when unreadable

// Applies one `key=value` command-line override.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Structural checks (ranges, enum values, array shapes). Throws ConfigError.
void validate(const RunConfig& cfg);

// Canonical manifest text; parse_config_text(to_text(cfg)) round-trips.
std::string to_text(const RunConfig& cfg);

// Experiment centers as m-dimensional points.
std::vector<std::vector<double>> centers_points(const RunConfig& cfg);

}  // namespace gaugeforge::config
