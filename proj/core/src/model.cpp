#include "agestruct/model.hpp"

#include <cmath>
#include <string>

#include "agestruct/error.hpp"
#include "agestruct/linalg.hpp"

namespace agestruct {

namespace {

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

void validate(const ModelParams& params) {
  if (params.betas.empty()) throw DomainError("betas: need at least one coefficient (n >= 1)");
  for (std::size_t i = 0; i < params.betas.size(); ++i)
    if (!positive_finite(params.betas[i]))
      throw DomainError("betas[" + std::to_string(i) + "]: must be positive");
  if (!positive_finite(params.rho)) throw DomainError("rho: must be positive");
  if (!positive_finite(params.mu0)) throw DomainError("mu0: must be positive");
  if (!positive_finite(params.r0)) throw DomainError("r0: must be positive");
}

double normalization_sum(std::span<const double> betas, double rho, double mu0) {
  const double d = rho + mu0;
  double sum = 0.0;
  double term = 1.0 / d;  // i! / d^{i+1}
  for (std::size_t i = 0; i < betas.size(); ++i) {
    sum += betas[i] * term;
    term *= static_cast<double>(i + 1) / d;
  }
  return sum;
}

std::vector<double> normalize_betas(std::span<const double> raw, double rho, double mu0) {
  if (raw.empty()) throw DomainError("betas: need at least one coefficient (n >= 1)");
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (!positive_finite(raw[i]))
      throw DomainError("betas[" + std::to_string(i) + "]: must be positive");
  if (!positive_finite(rho)) throw DomainError("rho: must be positive");
  if (!positive_finite(mu0)) throw DomainError("mu0: must be positive");

  const double s = normalization_sum(raw, rho, mu0);
  std::vector<double> out(raw.begin(), raw.end());
  if (s == 1.0) return out;
  for (double& b : out) b /= s;
  return out;
}

ModelParams with_normalized_betas(ModelParams params) {
  params.betas = normalize_betas(params.betas, params.rho, params.mu0);
  params.normalized = true;
  return params;
}

double fertility_age_profile(double age, const ModelParams& params) {
  if (!(age >= 0.0)) throw DomainError("fertility_age_profile: age must be nonnegative");
  // Horner in a, then the common exponential factor.
  double poly = 0.0;
  for (std::size_t i = params.betas.size(); i-- > 0;) poly = poly * age + params.betas[i];
  return poly * std::exp(-params.rho * age);
}

FertilityFit fit_fertility_profile(std::span<const double> ages, std::span<const double> values,
                                   std::size_t n, double rho) {
  if (ages.size() != values.size()) throw DomainError("fit_fertility_profile: size mismatch");
  if (n == 0) throw DomainError("fit_fertility_profile: n must be >= 1");
  if (!positive_finite(rho)) throw DomainError("fit_fertility_profile: rho must be positive");
  for (double a : ages)
    if (!(a >= 0.0)) throw DomainError("fit_fertility_profile: ages must be nonnegative");

  const std::size_t m = ages.size();
  // Design rows a^i e^{-rho a}.
  std::vector<double> design(m * n);
  for (std::size_t k = 0; k < m; ++k) {
    double v = std::exp(-rho * ages[k]);
    for (std::size_t i = 0; i < n; ++i) {
      design[k * n + i] = v;
      v *= ages[k];
    }
  }

  Matrix normal(n, n);
  std::vector<double> rhs(n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      rhs[i] += design[k * n + i] * values[k];
      for (std::size_t j = 0; j <= i; ++j) normal(i, j) += design[k * n + i] * design[k * n + j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) normal(i, j) = normal(j, i);

  FertilityFit fit;
  fit.betas = cholesky_solve(normal, rhs);
  double ss = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double model = 0.0;
    for (std::size_t i = 0; i < n; ++i) model += fit.betas[i] * design[k * n + i];
    ss += (values[k] - model) * (values[k] - model);
  }
  fit.residual_norm = std::sqrt(ss);
  return fit;
}

}  // namespace agestruct
