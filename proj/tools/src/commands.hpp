#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "config.hpp"

namespace agestruct::app {

struct Invocation {
  std::filesystem::path out_dir;
  std::ostream& out;
  std::ostream& err;
};

/// Output directory: explicit flag, then AGESTRUCT_OUTDIR, then the config, then ".".
std::filesystem::path resolve_output_dir(const std::string& flag, const RunConfig& cfg);

/// Runs one subcommand and returns its exit code. Configuration problems surface
/// as ConfigError; numerical failures as agestruct::Error.
int run_subcommand(std::string_view name, const RunConfig& cfg, const Invocation& io);

}  // namespace agestruct::app
