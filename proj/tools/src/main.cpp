#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "agestruct/error.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace app = agestruct::app;

namespace {

struct Options {
  std::string config;
  std::string out;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Nonlinear age-structured population model: steady states, trajectories, reconstruction, validation"};
  cli.set_version_flag("--version", std::string(AGESTRUCT_VERSION));
  cli.require_subcommand(1);

  const std::pair<const char*, const char*> commands[] = {
      {"steady", "Nontrivial equilibrium and its stability"},
      {"simulate", "Integrate the moment system and write trajectory.csv"},
      {"reconstruct", "Age densities along characteristics plus mass consistency"},
      {"sweep", "Equilibrium size over an R0 grid"},
      {"validate", "Cross-check the moment system against the Volterra oracle"},
      {"report", "Aggregate earlier outputs into summary.json"},
  };
  Options opts;
  for (const auto& [name, help] : commands) {
    auto* sub = cli.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "JSON run configuration")->required();
    sub->add_option("--out", opts.out, "Output directory (overrides AGESTRUCT_OUTDIR and output_dir)");
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return app::exit_schema;
  }

  const std::string name = cli.get_subcommands().front()->get_name();
  try {
    const app::RunConfig cfg = app::load_config(opts.config);
    const app::Invocation io{app::resolve_output_dir(opts.out, cfg), std::cout, std::cerr};
    return app::run_subcommand(name, cfg, io);
  } catch (const app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return e.code();
  } catch (const agestruct::Error& e) {
    std::cerr << name << " failed: " << e.what() << '\n';
    return app::exit_module;
  } catch (const std::exception& e) {
    std::cerr << name << " failed: " << e.what() << '\n';
    return app::exit_module;
  }
}
