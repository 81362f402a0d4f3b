#include "agestruct/reduce.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "agestruct/error.hpp"

namespace agestruct {

namespace {

// Augmented system: y = (P, P_1..P_n, C) with C' = Psi(P) the cumulative crowding integral.
class MomentSystem {
 public:
  MomentSystem(const ModelParams& params, const Feedback& feedback)
      : params_(params), feedback_(feedback) {}

  std::size_t dim() const { return params_.n() + 2; }

  void operator()(std::span<const double> y, std::span<double> dy) const {
    const std::size_t n = params_.n();
    const double p = y[0];
    const double phi = feedback_.phi(p);
    const double psi = feedback_.psi(p);
    const double d = params_.rho + params_.mu0 + psi;

    double births = 0.0;
    for (std::size_t i = 0; i < n; ++i) births += params_.betas[i] * y[i + 1];
    births *= params_.r0 * phi;

    dy[0] = births - (params_.mu0 + psi) * p;
    dy[1] = births - d * y[1];
    for (std::size_t i = 1; i < n; ++i)
      dy[i + 1] = static_cast<double>(i) * y[i] - d * y[i + 1];
    dy[n + 1] = psi;
  }

 private:
  const ModelParams& params_;
  const Feedback& feedback_;
};

void check_finite(const StateVector& s, const char* where) {
  bool ok = std::isfinite(s.p);
  for (double v : s.moments) ok = ok && std::isfinite(v);
  if (!ok) throw DomainError(std::string(where) + ": state has non-finite entries");
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 6> kC{1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[6][6] = {
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr std::array<double, 7> kE{71.0 / 57600,      0.0,          -71.0 / 16695, 71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

class Stepper {
 public:
  Stepper(const MomentSystem& sys) : sys_(sys), k_(7, std::vector<double>(sys.dim())), tmp_(sys.dim()) {}

  // Classical RK4; writes y1 and f(y1).
  void rk4(std::span<const double> y, std::span<const double> f, double h, std::span<double> y1) {
    const std::size_t m = y.size();
    for (std::size_t i = 0; i < m; ++i) tmp_[i] = y[i] + 0.5 * h * f[i];
    sys_(tmp_, k_[1]);
    for (std::size_t i = 0; i < m; ++i) tmp_[i] = y[i] + 0.5 * h * k_[1][i];
    sys_(tmp_, k_[2]);
    for (std::size_t i = 0; i < m; ++i) tmp_[i] = y[i] + h * k_[2][i];
    sys_(tmp_, k_[3]);
    for (std::size_t i = 0; i < m; ++i)
      y1[i] = y[i] + h / 6.0 * (f[i] + 2.0 * k_[1][i] + 2.0 * k_[2][i] + k_[3][i]);
  }

  // Dormand-Prince step; returns the scaled RMS error estimate. f(y1) lands in last_f().
  double dopri(std::span<const double> y, std::span<const double> f, double h, std::span<double> y1,
               double rtol, double atol) {
    const std::size_t m = y.size();
    std::copy(f.begin(), f.end(), k_[0].begin());
    for (std::size_t s = 0; s < 6; ++s) {
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= s; ++j) acc += kA[s][j] * k_[j][i];
        tmp_[i] = y[i] + h * acc;
      }
      if (s == 5) std::copy(tmp_.begin(), tmp_.end(), y1.begin());
      sys_(tmp_, k_[s + 1]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double e = 0.0;
      for (std::size_t j = 0; j < 7; ++j) e += kE[j] * k_[j][i];
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      const double r = h * e / sc;
      sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(m));
  }

  std::span<const double> last_f() const { return k_[6]; }

 private:
  const MomentSystem& sys_;
  std::vector<std::vector<double>> k_;
  std::vector<double> tmp_;
};

double rms_scaled(std::span<const double> v, std::span<const double> y, double rtol, double atol) {
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = v[i] / (atol + rtol * std::abs(y[i]));
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(v.size()));
}

double initial_step(const MomentSystem& sys, std::span<const double> y0, std::span<const double> f0,
                    double t_end, double rtol, double atol) {
  const double d0 = rms_scaled(y0, y0, rtol, atol);
  const double d1 = rms_scaled(f0, y0, rtol, atol);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, t_end);
  std::vector<double> y1(y0.size());
  std::vector<double> f1(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) y1[i] = y0[i] + h0 * f0[i];
  sys(y1, f1);
  for (std::size_t i = 0; i < y0.size(); ++i) f1[i] -= f0[i];
  const double d2 = rms_scaled(f1, y0, rtol, atol) / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min({100.0 * h0, h1, t_end});
}

}  // namespace

StateVector rhs(const StateVector& state, const ModelParams& params, const Feedback& feedback) {
  check_finite(state, "rhs");
  if (state.n() != params.n()) throw DomainError("rhs: state dimension does not match n");
  const MomentSystem sys(params, feedback);
  std::vector<double> y = state.flatten();
  y.push_back(0.0);
  std::vector<double> dy(y.size());
  sys(y, dy);
  dy.pop_back();
  return StateVector::from_flat(dy);
}

double birth_rate(const StateVector& state, const ModelParams& params, const Feedback& feedback) {
  double births = 0.0;
  for (std::size_t i = 0; i < params.n(); ++i) births += params.betas[i] * state.moments[i];
  return params.r0 * feedback.phi(state.p) * births;
}

std::vector<double> uniform_times(double t_end, std::size_t count) {
  if (count < 2) throw DomainError("uniform_times: need at least two samples");
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k)
    t[k] = t_end * static_cast<double>(k) / static_cast<double>(count - 1);
  t.back() = t_end;
  return t;
}

Trajectory::Sample Trajectory::at(double t) const {
  if (node_t_.empty()) throw RangeError("trajectory is empty");
  const double t0 = node_t_.front();
  const double t1 = node_t_.back();
  const double slack = 1e-12 * std::max(1.0, std::abs(t1));
  if (t < t0 - slack || t > t1 + slack)
    throw RangeError("trajectory query t=" + std::to_string(t) + " outside [" +
                     std::to_string(t0) + ", " + std::to_string(t1) + "]");
  t = std::clamp(t, t0, t1);

  const auto it = std::upper_bound(node_t_.begin(), node_t_.end(), t);
  std::size_t k = it == node_t_.begin() ? 0 : static_cast<std::size_t>(it - node_t_.begin()) - 1;
  if (k + 1 >= node_t_.size()) k = node_t_.size() - 2;
  const std::vector<double>& ya = node_y_[k];
  std::vector<double> y(ya.size());
  if (node_t_.size() == 1 || t == node_t_[k]) {
    y = ya;
  } else {
    const std::vector<double>& yb = node_y_[k + 1];
    const std::vector<double>& fa = node_f_[k];
    const std::vector<double>& fb = node_f_[k + 1];
    const double h = node_t_[k + 1] - node_t_[k];
    const double s = (t - node_t_[k]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = h00 * ya[i] + h10 * h * fa[i] + h01 * yb[i] + h11 * h * fb[i];
  }
  Sample out;
  out.psi_integral = y.back();
  y.pop_back();
  out.state = StateVector::from_flat(y);
  return out;
}

Trajectory integrate(const StateVector& initial, const ModelParams& params,
                     const Feedback& feedback, double t_end, const IntegratorSettings& settings,
                     std::span<const double> sample_times) {
  check_finite(initial, "integrate");
  if (initial.n() != params.n()) throw DomainError("integrate: state dimension does not match n");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw DomainError("integrate: t_end must be positive");
  if (initial.p < 0.0) throw DomainError("integrate: initial P is negative");
  for (double v : initial.moments)
    if (v < 0.0) throw DomainError("integrate: initial moments must be nonnegative");
  for (std::size_t k = 0; k < sample_times.size(); ++k) {
    if (sample_times[k] < 0.0 || sample_times[k] > t_end)
      throw DomainError("integrate: sample times must lie in [0, t_end]");
    if (k > 0 && !(sample_times[k] > sample_times[k - 1]))
      throw DomainError("integrate: sample times must be strictly increasing");
  }
  const bool adaptive = settings.method == IntegratorSettings::Method::rk45;
  if (!adaptive && !(settings.h > 0.0)) throw DomainError("integrate: rk4 step h must be positive");
  if (adaptive && !(settings.rtol > 0.0 && settings.atol > 0.0))
    throw DomainError("integrate: rtol and atol must be positive");

  const MomentSystem sys(params, feedback);
  const std::size_t dim = sys.dim();
  const std::size_t n_state = params.n() + 1;
  Stepper stepper(sys);

  Trajectory traj;
  std::vector<double> y = initial.flatten();
  y.push_back(0.0);
  std::vector<double> f(dim);
  sys(y, f);
  double t = 0.0;

  std::size_t next_sample = 0;
  const auto record_sample = [&](double time, std::span<const double> yy) {
    std::vector<double> state(yy.begin(), yy.begin() + static_cast<std::ptrdiff_t>(n_state));
    traj.times.push_back(time);
    traj.states.push_back(StateVector::from_flat(state));
    traj.birth_rates.push_back(birth_rate(traj.states.back(), params, feedback));
    traj.psi_integral.push_back(yy[dim - 1]);
  };
  const auto push_node = [&] {
    traj.node_t_.push_back(t);
    traj.node_y_.push_back(y);
    traj.node_f_.push_back(f);
    if (sample_times.empty()) {
      record_sample(t, y);
    } else {
      while (next_sample < sample_times.size() && sample_times[next_sample] <= t) {
        record_sample(sample_times[next_sample], y);
        ++next_sample;
      }
    }
  };
  push_node();

  double h = adaptive ? initial_step(sys, y, f, t_end, settings.rtol, settings.atol) : settings.h;
  const double h_min = 1e-14 * t_end;
  std::vector<double> y1(dim);

  while (t < t_end) {
    const double target =
        (!sample_times.empty() && next_sample < sample_times.size()) ? sample_times[next_sample] : t_end;
    double h_try = h;
    bool landing = false;
    if (t + h_try >= target || target - (t + h_try) < 1e-10 * h_try) {
      h_try = target - t;
      landing = true;
    }

    double err = 0.0;
    if (adaptive) {
      err = stepper.dopri(y, f, h_try, y1, settings.rtol, settings.atol);
      if (!(err <= 1.0) || !all_finite(y1)) {
        const double shrink = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
        h = h_try * shrink;
        if (h < h_min)
          throw StiffnessError("integrate: step size underflow at t=" + std::to_string(t));
        continue;
      }
    } else {
      stepper.rk4(y, f, h_try, y1);
      if (!all_finite(y1))
        throw IntegrationError("integrate: non-finite state at t=" + std::to_string(t + h_try));
    }

    bool clamped = false;
    for (std::size_t i = 0; i < n_state; ++i) {
      if (y1[i] >= 0.0) continue;
      if (y1[i] < -settings.negative_slack)
        throw IntegrationError("integrate: component " + std::to_string(i) + " = " +
                               std::to_string(y1[i]) + " below zero at t=" +
                               std::to_string(t + h_try));
      y1[i] = 0.0;
      clamped = true;
      ++traj.clamp_count;
    }

    t = landing ? target : t + h_try;
    y.swap(y1);
    if (adaptive && !clamped) {
      const auto last = stepper.last_f();
      std::copy(last.begin(), last.end(), f.begin());
    } else {
      sys(y, f);
    }
    push_node();

    if (adaptive) {
      const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      const double proposal = h_try * grow;
      h = landing ? std::max(proposal, h) : proposal;
    }
  }
  return traj;
}

}  // namespace agestruct
