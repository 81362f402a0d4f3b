#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "agestruct/density.hpp"
#include "agestruct/feedback.hpp"
#include "agestruct/model.hpp"

namespace agestruct {

/// Right-hand side of the (n+1)-dimensional moment system.
StateVector rhs(const StateVector& state, const ModelParams& params, const Feedback& feedback);

/// B = R0 Phi(P) Sum_i beta_i P_{i+1}.
double birth_rate(const StateVector& state, const ModelParams& params, const Feedback& feedback);

struct IntegratorSettings {
  enum class Method { rk4, rk45 };

  Method method = Method::rk45;
  double h = 1e-3;  ///< rk4 step
  double rtol = 1e-8;
  double atol = 1e-10;
  double negative_slack = 1e-9;
};

/// Integrated path of the moment system. Sample arrays are aligned; accepted
/// step nodes are kept for cubic Hermite dense output.
class Trajectory {
 public:
  struct Sample {
    StateVector state;
    double psi_integral = 0.0;
  };

  std::vector<double> times;
  std::vector<StateVector> states;
  std::vector<double> birth_rates;
  std::vector<double> psi_integral;  ///< int_0^t Psi(P(s)) ds
  std::size_t clamp_count = 0;       ///< undershoots clamped to zero

  double start_time() const { return node_t_.front(); }
  double end_time() const { return node_t_.back(); }
  std::size_t step_count() const { return node_t_.size() - 1; }

  /// Hermite interpolation between accepted steps. Throws RangeError outside [0, t_end].
  Sample at(double t) const;

 private:
  friend Trajectory integrate(const StateVector&, const ModelParams&, const Feedback&, double,
                              const IntegratorSettings&, std::span<const double>);

  std::vector<double> node_t_;
  std::vector<std::vector<double>> node_y_;  ///< (P, P_1..P_n, psi_integral)
  std::vector<std::vector<double>> node_f_;
};

/// Uniform sample times 0, t_end/(count-1), ..., t_end.
std::vector<double> uniform_times(double t_end, std::size_t count);

/// Integrates the moment system on [0, t_end]. Steps are shortened to land on
/// every requested sample time. Throws StiffnessError when the adaptive step
/// drops below 1e-14 t_end and IntegrationError when a component falls below
/// -negative_slack.
Trajectory integrate(const StateVector& initial, const ModelParams& params,
                     const Feedback& feedback, double t_end, const IntegratorSettings& settings,
                     std::span<const double> sample_times);

}  // namespace agestruct
