#include "agestruct/steady.hpp"

#include <algorithm>
#include <cmath>

#include "agestruct/error.hpp"
#include "agestruct/reduce.hpp"

namespace agestruct {

namespace {

// Sum_i beta_i i! / d^{i+1} and Sum_i (i+1) beta_i i! / d^{i+2}.
struct GammaSums {
  double value = 0.0;
  double slope = 0.0;
};

GammaSums gamma_sums(const ModelParams& params, double d) {
  GammaSums g;
  double term = 1.0 / d;  // i! / d^{i+1}
  for (std::size_t i = 0; i < params.n(); ++i) {
    g.value += params.betas[i] * term;
    g.slope += static_cast<double>(i + 1) * params.betas[i] * term / d;
    term *= static_cast<double>(i + 1) / d;
  }
  return g;
}

}  // namespace

double net_reproduction(double x, const ModelParams& params, const Feedback& feedback) {
  if (!(x >= 0.0)) throw DomainError("net_reproduction: x must be nonnegative");
  const double d = params.rho + params.mu0 + feedback.psi(x);
  return params.r0 * feedback.phi(x) * gamma_sums(params, d).value;
}

double reproduction_derivative(double x, const ModelParams& params, const Feedback& feedback) {
  if (feedback.is_linear_mode())
    throw UnsupportedError("reproduction_derivative: R is constant in linear mode");
  if (!(x >= 0.0)) throw DomainError("reproduction_derivative: x must be nonnegative");
  // d/dx [R0 Phi beta_i i! d^{-(i+1)}] = R0 beta_i i! [Phi' d - (i+1) Phi Psi'] / d^{i+2}
  const double d = params.rho + params.mu0 + feedback.psi(x);
  const GammaSums g = gamma_sums(params, d);
  return params.r0 * (feedback.phi_prime(x) * g.value -
                      feedback.phi(x) * feedback.psi_prime(x) * g.slope);
}

std::optional<double> steady_state(const ModelParams& params, const Feedback& feedback,
                                   const SteadyStateOptions& options) {
  if (!(options.tol > 0.0)) throw DomainError("steady_state: tol must be positive");
  const auto excess = [&](double x) { return net_reproduction(x, params, feedback) - 1.0; };
  if (excess(0.0) <= 0.0) return std::nullopt;

  double lo = 0.0;
  double hi = 1.0;
  while (excess(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 0x1p60) throw DivergenceError("steady_state: no sign change of R(x) - 1 below 2^60");
  }
  if (excess(hi) == 0.0) return hi;

  while (hi - lo > options.tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }

  double x = 0.5 * (lo + hi);
  if (!feedback.is_linear_mode()) {
    for (int k = 0; k < options.max_newton_steps; ++k) {
      const double f = excess(x);
      if (f == 0.0) break;
      const double step = f / reproduction_derivative(x, params, feedback);
      const double next = x - step;
      if (!(next >= lo && next <= hi)) break;
      x = next;
      if (std::abs(step) <= 1e-16 * std::max(1.0, x)) break;
    }
  }
  return x;
}

EquilibriumReport trivial_equilibrium(const ModelParams& params) {
  EquilibriumReport r;
  r.moments_star.assign(params.n(), 0.0);
  return r;
}

EquilibriumReport equilibrium(const ModelParams& params, const Feedback& feedback) {
  const auto root = steady_state(params, feedback);
  if (!root) return trivial_equilibrium(params);

  EquilibriumReport r;
  r.exists = true;
  r.p_star = *root;
  const double psi = feedback.psi(r.p_star);
  const double d = params.rho + params.mu0 + psi;

  r.moments_star.resize(params.n());
  r.moments_star[0] = (params.mu0 + psi) / d * r.p_star;
  // P_{i+1} = i!/d^i P_1, built recursively as P_{i+1} = i/d P_i.
  for (std::size_t i = 1; i < params.n(); ++i)
    r.moments_star[i] = static_cast<double>(i) / d * r.moments_star[i - 1];

  const StateVector s = r.state();
  r.birth_rate_star = birth_rate(s, params, feedback);
  const StateVector f = rhs(s, params, feedback);
  r.residual_inf_norm = std::abs(f.p);
  for (double v : f.moments) r.residual_inf_norm = std::max(r.residual_inf_norm, std::abs(v));
  return r;
}

std::vector<SweepRow> bifurcation_sweep(const ModelParams& base, const Feedback& feedback,
                                        std::span<const double> r0_grid) {
  if (r0_grid.empty()) throw DomainError("bifurcation_sweep: grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(r0_grid.size());
  ModelParams params = base;
  for (double r0 : r0_grid) {
    if (!(r0 > 0.0)) throw DomainError("bifurcation_sweep: R0 values must be positive");
    params.r0 = r0;
    rows.push_back({r0, steady_state(params, feedback)});
  }
  return rows;
}

}  // namespace agestruct
