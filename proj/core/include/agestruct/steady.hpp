#pragma once

#include <optional>
#include <span>
#include <vector>

#include "agestruct/density.hpp"
#include "agestruct/feedback.hpp"
#include "agestruct/model.hpp"

namespace agestruct {

/// R(x) = R0 Phi(x) Sum_i beta_i i! / (rho + mu0 + Psi(x))^{i+1}.
double net_reproduction(double x, const ModelParams& params, const Feedback& feedback);

/// Closed-form R'(x). Throws UnsupportedError in linear mode.
double reproduction_derivative(double x, const ModelParams& params, const Feedback& feedback);

struct SteadyStateOptions {
  double tol = 1e-12;            ///< bisection width (relative to max(1, x))
  double residual_tol = 1e-12;   ///< |R(P*) - 1| gate after Newton polish
  int max_newton_steps = 5;
};

/// Unique root of R(x) = 1, or nullopt when R(0) <= 1 (trivial equilibrium only).
/// Throws DivergenceError if no bracket is found below 2^60.
std::optional<double> steady_state(const ModelParams& params, const Feedback& feedback,
                                   const SteadyStateOptions& options = {});

struct EquilibriumReport {
  bool exists = false;
  double p_star = 0.0;
  std::vector<double> moments_star;
  double birth_rate_star = 0.0;
  double residual_inf_norm = 0.0;

  StateVector state() const { return {p_star, moments_star}; }
};

/// Explicit nontrivial equilibrium: P1* = (mu0 + Psi)/(rho + mu0 + Psi) P*,
/// P_{i+1}* = i!/(rho + mu0 + Psi)^i P1*. Falls back to the trivial equilibrium.
EquilibriumReport equilibrium(const ModelParams& params, const Feedback& feedback);

/// All-zero equilibrium of dimension n + 1.
EquilibriumReport trivial_equilibrium(const ModelParams& params);

struct SweepRow {
  double r0 = 0.0;
  std::optional<double> p_star;
};

std::vector<SweepRow> bifurcation_sweep(const ModelParams& base, const Feedback& feedback,
                                        std::span<const double> r0_grid);

}  // namespace agestruct
