#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gaugeforge/cli.hpp"
#include "gaugeforge/errors.hpp"
#include "gaugeforge/run_config.hpp"

namespace {

struct CommandArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_command(CLI::App& app, const std::string& name, const std::string& desc,
                 CommandArgs& args) {
  CLI::App* sub = app.add_subcommand(name, desc);
  sub->add_option("--config", args.config_path, "experiment manifest (key = value text)")
      ->required();
  sub->add_option("--set", args.overrides, "override, e.g. --set solver.tol=1e-8")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaugeforge: gauge construction and conservation-form experiments for "
               "antisymmetric-potential systems on the unit ball"};
  app.require_subcommand(1);

  CommandArgs args;
  add_command(app, "gen", "generate a seeded antisymmetric potential", args);
  add_command(app, "gauge", "build the gauge factorization A = Q P and verify it", args);
  add_command(app, "solve", "solve the system directly and in conservation form", args);
  add_command(app, "morrey", "run sub-ball decay and integrability experiments", args);
  add_command(app, "study", "grid-refinement convergence study", args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  gaugeforge::config::RunConfig cfg;
  try {
    cfg = gaugeforge::config::parse_config_file(args.config_path);
    for (const std::string& ov : args.overrides) gaugeforge::config::apply_override(cfg, ov);
    gaugeforge::config::validate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 4;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  return gaugeforge::cli::dispatch(command, cfg);
}
