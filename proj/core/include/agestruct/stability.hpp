#pragma once

#include <complex>
#include <string_view>
#include <vector>

#include "agestruct/density.hpp"
#include "agestruct/feedback.hpp"
#include "agestruct/linalg.hpp"
#include "agestruct/model.hpp"
#include "agestruct/steady.hpp"

namespace agestruct {

enum class Verdict { asymptotically_stable, unstable, marginal };

std::string_view to_string(Verdict verdict);

struct StabilityReport {
  Matrix jacobian;
  std::vector<std::complex<double>> eigenvalues;
  double spectral_abscissa = 0.0;
  double trace = 0.0;
  Verdict verdict = Verdict::marginal;
};

/// Analytic Jacobian of the moment system at `state`.
Matrix jacobian_at(const StateVector& state, const ModelParams& params, const Feedback& feedback);

/// Eigenvalues of a general real matrix: balancing, Hessenberg reduction and
/// Francis double-shift QR. Throws EigenvalueError (with the partial spectrum)
/// after 100 (n+1) sweeps without convergence.
std::vector<std::complex<double>> eigenvalues(const Matrix& m);

/// Spectrum and verdict for an arbitrary matrix; |max Re| <= margin is marginal.
StabilityReport classify_matrix(const Matrix& m, double margin = 1e-8);

/// Classifies the equilibrium described by the report (trivial when !exists).
StabilityReport classify(const EquilibriumReport& equilibrium, const ModelParams& params,
                         const Feedback& feedback, double margin = 1e-8);

}  // namespace agestruct
