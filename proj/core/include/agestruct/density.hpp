#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "agestruct/model.hpp"

namespace agestruct {

/// Initial age density p0(a): either C e^{-lambda a} or a nonnegative table that
/// is linearly interpolated between nodes and zero beyond the last age.
class InitialDensity {
 public:
  enum class Kind { exponential, tabulated };

  static InitialDensity exponential(double c, double lambda);
  static InitialDensity tabulated(std::vector<double> ages, std::vector<double> values);
  static InitialDensity zero() { return exponential(0.0, 1.0); }

  Kind kind() const noexcept { return kind_; }
  double c() const noexcept { return c_; }
  double lambda() const noexcept { return lambda_; }
  const std::vector<double>& ages() const noexcept { return ages_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double operator()(double age) const;
  /// Total mass: C/lambda, or composite Simpson over the table.
  double mass() const;
  /// Mass on [age, inf).
  double mass_beyond(double age) const;
  /// Smallest age beyond which the density is below rel_tol * p0(0) (table end for tabulated).
  double support_end(double rel_tol = 1e-16) const;

 private:
  Kind kind_ = Kind::exponential;
  double c_ = 0.0;
  double lambda_ = 1.0;
  std::vector<double> ages_;
  std::vector<double> values_;
};

/// Reduced state: total population P and weighted moments P_1..P_n.
struct StateVector {
  double p = 0.0;
  std::vector<double> moments;

  std::size_t n() const noexcept { return moments.size(); }
  std::vector<double> flatten() const;
  static StateVector from_flat(std::span<const double> flat);
};

struct MomentQuadrature {
  /// Use composite Simpson even when a closed form exists (exponential kind).
  bool force_numeric = false;
  double step = 1e-3;
  double tail_rel_tol = 1e-16;
};

/// P(0) = int p0 and P_i(0) = int a^{i-1} e^{-rho a} p0(a) da, i = 1..n.
StateVector density_moments(const InitialDensity& p0, double rho, std::size_t n,
                            const MomentQuadrature& quad = {});

}  // namespace agestruct
