#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "agestruct/density.hpp"
#include "agestruct/feedback.hpp"
#include "agestruct/model.hpp"
#include "agestruct/reduce.hpp"

namespace agestruct {

/// Nonlinear model with general mortality mu(a, P) and fertility beta(a, P).
struct GeneralModel {
  /// Optional factorization mu = mu0 + psi(P), beta = size_factor(P) age_factor(a).
  /// When present the solver uses cumulative psi-integrals instead of per-cohort sums.
  struct Separable {
    double mu0 = 0.0;
    std::function<double(double)> psi;
    std::function<double(double)> size_factor;
    std::function<double(double)> age_factor;
  };

  std::function<double(double, double)> mortality;
  std::function<double(double, double)> fertility;
  InitialDensity p0;
  std::optional<Separable> separable;
};

/// Wraps the separable model: mu = mu0 + Psi(P), beta = R0 Phi(P) Sum beta_i a^i e^{-rho a}.
GeneralModel separable_model(const ModelParams& params, const Feedback& feedback,
                             const InitialDensity& p0);

/// Total population history on a uniform grid t_j = j dt, linearly interpolated.
struct PopulationHistory {
  double dt = 1.0;
  std::vector<double> values;
  double operator()(double t) const;
  double end_time() const { return dt * static_cast<double>(values.size() - 1); }
};

/// exp(-int_0^x mu(a - s, P(t - s)) ds) by the trapezoid rule on the history step.
double survival_factor(double age, double t, double lookback, const PopulationHistory& history,
                       const GeneralModel& model);

struct OracleSettings {
  double t_end = 5.0;
  double dt = 0.002;
  double tol = 1e-10;
  std::size_t k_max = 500;
  bool force_general = false;  ///< ignore the separable fast path
};

struct OracleSolution {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> b;
  std::vector<double> p;
  std::size_t iterations = 0;
  double final_update = 0.0;
};

using IterationLog = std::function<void(std::size_t iteration, double update_norm)>;

/// Fixed-point iteration of the Volterra system for (B, P), all integrals by the
/// composite trapezoid rule on the dt grid. Throws NonConvergenceError after k_max.
OracleSolution volterra_solve(const GeneralModel& model, const OracleSettings& settings,
                              const IterationLog& log = {});

/// Applies one iteration to (b, p) and returns the sup-norm change.
double oracle_update_norm(const GeneralModel& model, const OracleSettings& settings,
                          std::span<const double> b, std::span<const double> p);

struct CrossValidationReport {
  double gap_p = 0.0;
  double gap_b = 0.0;
  std::size_t oracle_iterations = 0;
  double oracle_update = 0.0;
  OracleSolution oracle;
  Trajectory ode;
};

/// Runs the moment reduction and the Volterra oracle on the same separable model
/// and reports sup-norm gaps of P and B on the oracle grid.
CrossValidationReport cross_validate(const ModelParams& params, const Feedback& feedback,
                                     const InitialDensity& p0, const OracleSettings& oracle,
                                     const IntegratorSettings& integrator = {.rtol = 1e-10,
                                                                             .atol = 1e-12},
                                     const IterationLog& log = {});

}  // namespace agestruct
