#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace agestruct {

/// Scalar parameters of the separable model. n is the number of fertility
/// monomials, i.e. betas.size().
struct ModelParams {
  std::vector<double> betas;
  double rho = 1.0;
  double mu0 = 1.0;
  double r0 = 1.0;
  bool normalized = false;

  std::size_t n() const noexcept { return betas.size(); }
};

/// Throws DomainError naming the offending field (e.g. "betas[1]").
void validate(const ModelParams& params);

/// Sum_i beta_i i! / (rho + mu0)^{i+1}; equals 1 for normalized parameters.
double normalization_sum(std::span<const double> betas, double rho, double mu0);

/// Scales the raw betas by 1/normalization_sum so the normalization identity holds.
std::vector<double> normalize_betas(std::span<const double> raw_betas, double rho, double mu0);

/// Returns a copy of params with normalized betas and the normalized flag set.
ModelParams with_normalized_betas(ModelParams params);

/// Sum_i beta_i a^i e^{-rho a}.
double fertility_age_profile(double age, const ModelParams& params);

struct FertilityFit {
  std::vector<double> betas;
  double residual_norm = 0.0;  ///< Euclidean norm of the sample residuals
};

/// Least-squares fit of Sum_i beta_i a^i e^{-rho a} to the tabulated profile via
/// the normal equations. Throws SingularFitError on a rank-deficient design.
FertilityFit fit_fertility_profile(std::span<const double> ages, std::span<const double> values,
                                   std::size_t n, double rho);

}  // namespace agestruct
