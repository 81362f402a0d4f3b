#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "agestruct/feedback.hpp"
#include "agestruct/model.hpp"

namespace agestruct::testing {

// REF1: n=1, beta0=1, rho=mu0=0.5, Phi=1/(1+x), Psi=x, R0=4 (normalized).
inline ModelParams ref1(double r0 = 4.0) { return {{1.0}, 0.5, 0.5, r0, true}; }

// REF2: n=2, betas=(0.5,0.5), rho=mu0=0.5, same feedback, R0=16/3 (normalized).
inline ModelParams ref2() { return {{0.5, 0.5}, 0.5, 0.5, 16.0 / 3.0, true}; }

inline Feedback ref_feedback() { return {PhiSpec::hill(1.0, 1.0), PsiSpec::linear(1.0)}; }

// Linear-mode fixture: P1' = (R0 beta0 - rho - mu0) P1 = P1.
inline ModelParams linear_fixture() { return {{1.0}, 0.5, 0.5, 2.0, false}; }

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

/// Random valid configuration: normalized betas, one of the shipped feedback families.
struct RandomConfig {
  ModelParams params;
  Feedback feedback;
};

inline Feedback random_feedback(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> k(0.5, 5.0);
  std::uniform_real_distribution<double> m(1.0, 3.0);
  std::uniform_real_distribution<double> c(0.2, 2.0);
  std::bernoulli_distribution coin(0.5);
  PhiSpec phi = coin(rng) ? PhiSpec::hill(k(rng), m(rng)) : PhiSpec::exponential(k(rng));
  PsiSpec psi = coin(rng) ? PsiSpec::linear(c(rng)) : PsiSpec::power(c(rng), m(rng));
  return {std::move(phi), std::move(psi)};
}

inline RandomConfig random_config(std::mt19937_64& rng, std::size_t max_n, double r0_lo, double r0_hi) {
  std::uniform_int_distribution<std::size_t> n_dist(1, max_n);
  std::uniform_real_distribution<double> beta(0.1, 3.0);
  std::uniform_real_distribution<double> rate(0.1, 2.0);
  std::uniform_real_distribution<double> r0(r0_lo, r0_hi);
  ModelParams p;
  p.betas.resize(n_dist(rng));
  for (double& b : p.betas) b = beta(rng);
  p.rho = rate(rng);
  p.mu0 = rate(rng);
  p.r0 = r0(rng);
  return {with_normalized_betas(p), random_feedback(rng)};
}

}  // namespace agestruct::testing
