#pragma once

#include <string>
#include <vector>

#include "gaugeforge/domain.hpp"
#include "gaugeforge/run_config.hpp"

namespace gaugeforge::cli {

// Batch commands. Each reads/writes files under cfg.output_dir and throws
// ConfigError / IoError / SolverError / MonitorError on failure.
//
//  gen    - seeded potential -> omega.gfld + gen.json
//  gauge  - pipeline -> U/P/Q/A.gfld + gauge.json (+ sweep.csv in sweep mode)
//  solve  - point-form + divergence-form states -> v_*.gfld + solve.json
//  morrey - decay + integrability reports -> morrey.csv + morrey.json
//  study  - pipeline at N in {17, 33, 65} -> study.csv + study.json
void cmd_gen(const config::RunConfig& cfg);
void cmd_gauge(const config::RunConfig& cfg);
void cmd_solve(const config::RunConfig& cfg);
void cmd_morrey(const config::RunConfig& cfg);
void cmd_study(const config::RunConfig& cfg);

// Runs one command and maps exceptions to the process exit code:
// 0 success, 2 monitor breach, 3 solver failure, 4 configuration or I/O.
int dispatch(const std::string& command, const config::RunConfig& cfg) noexcept;

// Boundary data for the configured kind, stacked per boundary point.
std::vector<double> boundary_data(const domain::GridDomain& dom, int n,
                                  const config::BoundaryConfig& bc);

}  // namespace gaugeforge::cli
