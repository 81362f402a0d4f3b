#include "agestruct/feedback.hpp"

#include <cmath>
#include <utility>

#include "agestruct/error.hpp"

namespace agestruct {

PhiSpec PhiSpec::exponential(double k) {
  PhiSpec s;
  s.family = Family::exponential;
  s.k = k;
  return s;
}

PhiSpec PhiSpec::hill(double k, double m) {
  PhiSpec s;
  s.family = Family::hill;
  s.k = k;
  s.m = m;
  return s;
}

PhiSpec PhiSpec::custom(std::function<double(double)> fn, std::function<double(double)> deriv) {
  PhiSpec s;
  s.family = Family::custom;
  s.fn = std::move(fn);
  s.deriv = std::move(deriv);
  return s;
}

PsiSpec PsiSpec::linear(double c) {
  PsiSpec s;
  s.family = Family::linear;
  s.c = c;
  return s;
}

PsiSpec PsiSpec::power(double c, double gamma) {
  PsiSpec s;
  s.family = Family::power;
  s.c = c;
  s.gamma = gamma;
  return s;
}

PsiSpec PsiSpec::custom(std::function<double(double)> fn, std::function<double(double)> deriv) {
  PsiSpec s;
  s.family = Family::custom;
  s.fn = std::move(fn);
  s.deriv = std::move(deriv);
  return s;
}

Feedback::Feedback(PhiSpec phi, PsiSpec psi) : phi_(std::move(phi)), psi_(std::move(psi)) {
  switch (phi_.family) {
    case PhiSpec::Family::hill:
      if (!(phi_.m >= 1.0) || !std::isfinite(phi_.m)) throw DomainError("phi.m must be >= 1");
      [[fallthrough]];
    case PhiSpec::Family::exponential:
      if (!(phi_.k > 0.0) || !std::isfinite(phi_.k)) throw DomainError("phi.k must be positive");
      break;
    case PhiSpec::Family::custom:
      if (!phi_.fn || !phi_.deriv) throw DomainError("phi: custom family needs fn and deriv");
      break;
  }
  switch (psi_.family) {
    case PsiSpec::Family::power:
      if (!(psi_.gamma >= 1.0) || !std::isfinite(psi_.gamma))
        throw DomainError("psi.gamma must be >= 1");
      [[fallthrough]];
    case PsiSpec::Family::linear:
      if (!(psi_.c > 0.0) || !std::isfinite(psi_.c)) throw DomainError("psi.c must be positive");
      break;
    case PsiSpec::Family::custom:
      if (!psi_.fn || !psi_.deriv) throw DomainError("psi: custom family needs fn and deriv");
      break;
  }
}

Feedback Feedback::linear_mode() {
  Feedback f;
  f.linear_ = true;
  return f;
}

double Feedback::phi(double x) const {
  if (linear_) return 1.0;
  switch (phi_.family) {
    case PhiSpec::Family::exponential:
      return std::exp(-x / phi_.k);
    case PhiSpec::Family::hill:
      return 1.0 / (1.0 + std::pow(x / phi_.k, phi_.m));
    case PhiSpec::Family::custom:
      return phi_.fn(x);
  }
  return 0.0;
}

double Feedback::phi_prime(double x) const {
  if (linear_) return 0.0;
  switch (phi_.family) {
    case PhiSpec::Family::exponential:
      return -std::exp(-x / phi_.k) / phi_.k;
    case PhiSpec::Family::hill: {
      const double u = x / phi_.k;
      const double d = 1.0 + std::pow(u, phi_.m);
      return -phi_.m * std::pow(u, phi_.m - 1.0) / (phi_.k * d * d);
    }
    case PhiSpec::Family::custom:
      return phi_.deriv(x);
  }
  return 0.0;
}

double Feedback::psi(double x) const {
  if (linear_) return 0.0;
  switch (psi_.family) {
    case PsiSpec::Family::linear:
      return psi_.c * x;
    case PsiSpec::Family::power:
      return psi_.c * std::pow(x, psi_.gamma);
    case PsiSpec::Family::custom:
      return psi_.fn(x);
  }
  return 0.0;
}

double Feedback::psi_prime(double x) const {
  if (linear_) return 0.0;
  switch (psi_.family) {
    case PsiSpec::Family::linear:
      return psi_.c;
    case PsiSpec::Family::power:
      return psi_.c * psi_.gamma * std::pow(x, psi_.gamma - 1.0);
    case PsiSpec::Family::custom:
      return psi_.deriv(x);
  }
  return 0.0;
}

bool AssumptionReport::all_passed() const {
  for (const auto& c : clauses)
    if (!c.passed) return false;
  return true;
}

const ClauseResult* AssumptionReport::find(const std::string& clause) const {
  for (const auto& c : clauses)
    if (c.clause == clause) return &c;
  return nullptr;
}

namespace {

template <typename Pred>
ClauseResult check_points(std::string name, std::span<const double> grid, bool skip_origin,
                          Pred&& ok) {
  ClauseResult r{std::move(name)};
  for (double x : grid) {
    if (skip_origin && x == 0.0) continue;
    if (!ok(x)) {
      r.passed = false;
      r.violating_point = x;
      break;
    }
  }
  return r;
}

ClauseResult check_single(std::string name, double point, bool ok) {
  ClauseResult r{std::move(name)};
  r.passed = ok;
  if (!ok) r.violating_point = point;
  return r;
}

}  // namespace

AssumptionReport check_assumptions(const Feedback& fb, std::span<const double> grid,
                                   const AssumptionOptions& opt) {
  AssumptionReport report;
  if (fb.is_linear_mode()) {
    for (const char* name : {"phi(x)>=0", "phi'(x)<0", "phi(0)=1", "phi(+inf)=0", "psi(x)>=0",
                             "psi'(x)>0", "psi(0)=0", "psi(+inf)=+inf"})
      report.clauses.push_back({name});
    return report;
  }
  const double far = opt.far_point;
  report.clauses.push_back(check_points("phi(x)>=0", grid, false, [&](double x) { return fb.phi(x) >= 0.0; }));
  report.clauses.push_back(check_points("phi'(x)<0", grid, true, [&](double x) { return fb.phi_prime(x) < 0.0; }));
  report.clauses.push_back(check_single("phi(0)=1", 0.0, std::abs(fb.phi(0.0) - 1.0) <= 1e-12));
  report.clauses.push_back(check_single("phi(+inf)=0", far, fb.phi(far) < opt.phi_far_max));
  report.clauses.push_back(check_points("psi(x)>=0", grid, false, [&](double x) { return fb.psi(x) >= 0.0; }));
  report.clauses.push_back(check_points("psi'(x)>0", grid, true, [&](double x) { return fb.psi_prime(x) > 0.0; }));
  report.clauses.push_back(check_single("psi(0)=0", 0.0, std::abs(fb.psi(0.0)) <= 1e-12));
  report.clauses.push_back(check_single("psi(+inf)=+inf", far, fb.psi(far) > opt.psi_far_min));
  return report;
}

}  // namespace agestruct
