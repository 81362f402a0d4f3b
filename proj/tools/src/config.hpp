#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "agestruct/density.hpp"
#include "agestruct/feedback.hpp"
#include "agestruct/model.hpp"
#include "agestruct/oracle.hpp"
#include "agestruct/reduce.hpp"

namespace agestruct::app {

/// Process exit codes.
enum ExitCode : int {
  exit_ok = 0,
  exit_threshold = 1,   ///< validate gap above the configured threshold
  exit_schema = 2,      ///< unreadable JSON, unknown key, wrong type, missing section
  exit_invariant = 3,   ///< value outside its admissible range
  exit_module = 4,      ///< numerical or I/O failure inside a subcommand
};

/// Configuration problem carrying the exit code and a path-qualified message.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

struct FeedbackConfig {
  bool linear_mode = false;
  PhiSpec phi = PhiSpec::hill(1.0, 1.0);
  PsiSpec psi = PsiSpec::linear(1.0);

  Feedback build() const { return linear_mode ? Feedback::linear_mode() : Feedback(phi, psi); }
};

struct ReconstructionConfig {
  std::vector<double> times;
  double age_step = 0.01;
  std::optional<double> age_max;  ///< default: tail-bound grid end
};

struct OracleConfig {
  OracleSettings settings;
  double gap_threshold = 5e-3;
};

struct RunConfig {
  std::vector<double> input_betas;
  bool normalize_betas = false;
  ModelParams params;  ///< betas already normalized when requested
  FeedbackConfig feedback;
  std::optional<InitialDensity> initial_density;
  IntegratorSettings integrator;
  double t_end = 50.0;
  std::size_t samples = 1001;
  std::optional<ReconstructionConfig> reconstruction;
  std::optional<OracleConfig> oracle;
  std::optional<std::vector<double>> sweep_grid;
  std::optional<std::string> output_dir;

  /// Fully resolved configuration with defaults filled in.
  nlohmann::json to_json() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace agestruct::app
