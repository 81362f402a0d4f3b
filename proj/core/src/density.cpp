#include "agestruct/density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agestruct/error.hpp"
#include "agestruct/quadrature.hpp"

namespace agestruct {

InitialDensity InitialDensity::exponential(double c, double lambda) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("initial_density.c: must be nonnegative");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("initial_density.lambda: must be positive");
  InitialDensity d;
  d.kind_ = Kind::exponential;
  d.c_ = c;
  d.lambda_ = lambda;
  return d;
}

InitialDensity InitialDensity::tabulated(std::vector<double> ages, std::vector<double> values) {
  if (ages.size() != values.size())
    throw DomainError("initial_density: ages and values differ in length");
  if (ages.size() < 2) throw DomainError("initial_density.ages: need at least two nodes");
  if (!(ages.front() >= 0.0)) throw DomainError("initial_density.ages[0]: must be nonnegative");
  for (std::size_t k = 1; k < ages.size(); ++k)
    if (!(ages[k] > ages[k - 1]))
      throw DomainError("initial_density.ages[" + std::to_string(k) + "]: must be increasing");
  for (std::size_t k = 0; k < values.size(); ++k)
    if (!(values[k] >= 0.0) || !std::isfinite(values[k]))
      throw DomainError("initial_density.values[" + std::to_string(k) + "]: must be nonnegative");
  InitialDensity d;
  d.kind_ = Kind::tabulated;
  d.ages_ = std::move(ages);
  d.values_ = std::move(values);
  return d;
}

double InitialDensity::operator()(double age) const {
  if (kind_ == Kind::exponential) return age < 0.0 ? 0.0 : c_ * std::exp(-lambda_ * age);
  if (age < ages_.front() || age > ages_.back()) return 0.0;
  const auto it = std::upper_bound(ages_.begin(), ages_.end(), age);
  if (it == ages_.end()) return values_.back();
  const std::size_t k = static_cast<std::size_t>(it - ages_.begin());
  const double w = (age - ages_[k - 1]) / (ages_[k] - ages_[k - 1]);
  return (1.0 - w) * values_[k - 1] + w * values_[k];
}

double InitialDensity::mass() const {
  if (kind_ == Kind::exponential) return c_ / lambda_;
  return simpson(ages_, values_);
}

double InitialDensity::mass_beyond(double age) const {
  if (kind_ == Kind::exponential) {
    if (age <= 0.0) return mass();
    return c_ / lambda_ * std::exp(-lambda_ * age);
  }
  if (age <= ages_.front()) return mass();
  if (age >= ages_.back()) return 0.0;
  std::vector<double> x{age};
  std::vector<double> y{(*this)(age)};
  for (std::size_t k = 0; k < ages_.size(); ++k) {
    if (ages_[k] <= age) continue;
    x.push_back(ages_[k]);
    y.push_back(values_[k]);
  }
  return simpson(x, y);
}

double InitialDensity::support_end(double rel_tol) const {
  if (kind_ == Kind::tabulated) return ages_.back();
  if (c_ == 0.0) return 0.0;
  return -std::log(rel_tol) / lambda_;
}

std::vector<double> StateVector::flatten() const {
  std::vector<double> out;
  out.reserve(moments.size() + 1);
  out.push_back(p);
  out.insert(out.end(), moments.begin(), moments.end());
  return out;
}

StateVector StateVector::from_flat(std::span<const double> flat) {
  StateVector s;
  s.p = flat[0];
  s.moments.assign(flat.begin() + 1, flat.end());
  return s;
}

StateVector density_moments(const InitialDensity& p0, double rho, std::size_t n,
                            const MomentQuadrature& quad) {
  if (n == 0) throw DomainError("density_moments: n must be >= 1");
  if (!(rho > 0.0)) throw DomainError("density_moments: rho must be positive");

  StateVector s;
  s.moments.assign(n, 0.0);

  if (p0.kind() == InitialDensity::Kind::exponential && !quad.force_numeric) {
    // int a^{i-1} e^{-(rho+lambda) a} C da = C (i-1)! / (rho+lambda)^i
    const double d = rho + p0.lambda();
    s.p = p0.mass();
    double term = p0.c() / d;
    for (std::size_t i = 0; i < n; ++i) {
      s.moments[i] = term;
      term *= static_cast<double>(i + 1) / d;
    }
    return s;
  }

  std::vector<double> ages;
  std::vector<double> dens;
  if (p0.kind() == InitialDensity::Kind::tabulated) {
    ages = p0.ages();
    dens = p0.values();
  } else {
    const double end = p0.support_end(quad.tail_rel_tol);
    const auto count = static_cast<std::size_t>(std::ceil(end / quad.step));
    ages.resize(count + 1);
    dens.resize(count + 1);
    for (std::size_t k = 0; k <= count; ++k) {
      ages[k] = end * static_cast<double>(k) / static_cast<double>(count);
      dens[k] = p0(ages[k]);
    }
  }

  s.p = simpson(ages, dens);
  std::vector<double> integrand(ages.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < ages.size(); ++k)
      integrand[k] = std::pow(ages[k], static_cast<double>(i)) * std::exp(-rho * ages[k]) * dens[k];
    s.moments[i] = simpson(ages, integrand);
  }
  return s;
}

}  // namespace agestruct
