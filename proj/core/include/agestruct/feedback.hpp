#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace agestruct {

/// Size-dependent fertility damping Phi(x).
struct PhiSpec {
  enum class Family { exponential, hill, custom };

  Family family = Family::hill;
  double k = 1.0;  ///< scale K > 0
  double m = 1.0;  ///< hill exponent, m >= 1
  std::function<double(double)> fn;     ///< custom only
  std::function<double(double)> deriv;  ///< custom only

  static PhiSpec exponential(double k);
  static PhiSpec hill(double k, double m = 1.0);
  static PhiSpec custom(std::function<double(double)> fn, std::function<double(double)> deriv);
};

/// Size-dependent crowding mortality Psi(x).
struct PsiSpec {
  enum class Family { linear, power, custom };

  Family family = Family::linear;
  double c = 1.0;      ///< coefficient c > 0
  double gamma = 1.0;  ///< power exponent, gamma >= 1
  std::function<double(double)> fn;
  std::function<double(double)> deriv;

  static PsiSpec linear(double c);
  static PsiSpec power(double c, double gamma);
  static PsiSpec custom(std::function<double(double)> fn, std::function<double(double)> deriv);
};

/// The pair (Phi, Psi) with closed-form derivatives. In linear mode Phi == 1 and
/// Psi == 0 (the linear Lotka-McKendrick model), exempt from the assumption checks.
class Feedback {
 public:
  Feedback(PhiSpec phi, PsiSpec psi);

  static Feedback linear_mode();

  double phi(double x) const;
  double phi_prime(double x) const;
  double psi(double x) const;
  double psi_prime(double x) const;

  bool is_linear_mode() const noexcept { return linear_; }
  const PhiSpec& phi_spec() const noexcept { return phi_; }
  const PsiSpec& psi_spec() const noexcept { return psi_; }

 private:
  Feedback() = default;

  PhiSpec phi_;
  PsiSpec psi_;
  bool linear_ = false;
};

struct AssumptionOptions {
  double far_point = 1e12;  ///< stand-in for +infinity
  double phi_far_max = 1e-6;
  double psi_far_min = 1e6;
};

struct ClauseResult {
  std::string clause;
  bool passed = true;
  double violating_point = 0.0;  ///< first failing grid point (meaningful when !passed)
};

struct AssumptionReport {
  std::vector<ClauseResult> clauses;
  bool all_passed() const;
  const ClauseResult* find(const std::string& clause) const;
};

/// Evaluates every clause of the Phi/Psi assumptions on the grid. Derivative
/// clauses are only required on (0, inf) and skip x = 0. In linear mode every
/// clause is reported as passed.
AssumptionReport check_assumptions(const Feedback& feedback, std::span<const double> grid,
                                   const AssumptionOptions& options = {});

}  // namespace agestruct
