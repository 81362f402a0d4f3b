#include "agestruct/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agestruct/error.hpp"
#include "agestruct/quadrature.hpp"

namespace agestruct {

double CharacteristicJump::size() const { return std::abs(above - below); }

DensityField reconstruct_density(const Trajectory& traj, const InitialDensity& p0,
                                 const ModelParams& params, const Feedback& feedback, double t,
                                 std::span<const double> ages) {
  const double slack = 1e-12 * std::max(1.0, traj.end_time());
  if (t < -slack || t > traj.end_time() + slack)
    throw RangeError("reconstruct_density: t=" + std::to_string(t) + " outside the trajectory");
  t = std::clamp(t, 0.0, traj.end_time());
  for (std::size_t k = 0; k < ages.size(); ++k) {
    if (!(ages[k] >= 0.0)) throw DomainError("reconstruct_density: ages must be nonnegative");
    if (k > 0 && !(ages[k] > ages[k - 1]))
      throw DomainError("reconstruct_density: ages must be increasing");
  }

  DensityField field;
  field.time = t;
  field.ages.assign(ages.begin(), ages.end());
  field.values.resize(ages.size());

  const double c_t = traj.at(t).psi_integral;
  // Survival of the cohorts present at time zero.
  const double initial_survival = std::exp(-params.mu0 * t - c_t);

  for (std::size_t k = 0; k < ages.size(); ++k) {
    const double a = ages[k];
    double value = 0.0;
    if (a >= t) {
      value = p0(a - t) * initial_survival;
    } else {
      const Trajectory::Sample birth = traj.at(t - a);
      value = birth_rate(birth.state, params, feedback) *
              std::exp(-params.mu0 * a - (c_t - birth.psi_integral));
    }
    field.values[k] = std::max(0.0, value);
  }

  if (!ages.empty() && t > 0.0 && t < ages.back()) {
    const Trajectory::Sample origin = traj.at(0.0);
    field.jump = CharacteristicJump{
        t, std::max(0.0, birth_rate(origin.state, params, feedback)) * initial_survival,
        p0(0.0) * initial_survival};
  }

  if (!ages.empty()) {
    const double last = ages.back();
    if (last >= t) {
      field.tail_mass = initial_survival * p0.mass_beyond(last - t);
    } else {
      // Birth-branch integrand continued with its local decay rate at the grid end.
      const Trajectory::Sample s = traj.at(t - last);
      const double rate = params.mu0 + feedback.psi(s.state.p);
      field.tail_mass = field.values.back() / rate + initial_survival * p0.mass();
    }
  }
  return field;
}

std::vector<double> default_age_grid(const Trajectory& traj, const InitialDensity& p0,
                                     const ModelParams& params, double step) {
  if (!(step > 0.0)) throw DomainError("default_age_grid: step must be positive");
  double sup_b = 0.0;
  for (double b : traj.birth_rates) sup_b = std::max(sup_b, b);
  const double scale = p0.mass() + sup_b;
  double a_max = scale > 1e-10 ? std::log(scale / 1e-10) / params.mu0 : step;
  a_max = std::max(a_max, step);
  const auto count = static_cast<std::size_t>(std::ceil(a_max / step));
  std::vector<double> ages(count + 1);
  for (std::size_t k = 0; k <= count; ++k) ages[k] = step * static_cast<double>(k);
  return ages;
}

ConsistencyReport consistency_check(const DensityField& field, const Trajectory& traj) {
  ConsistencyReport r;
  r.time = field.time;
  r.tail_mass = field.tail_mass;
  r.p_reference = traj.at(field.time).state.p;

  const auto& a = field.ages;
  const auto& v = field.values;
  if (!field.jump) {
    r.mass_grid = simpson(a, v);
  } else {
    const double t = field.jump->age;
    const std::size_t split =
        static_cast<std::size_t>(std::lower_bound(a.begin(), a.end(), t) - a.begin());
    const double spacing = a.size() > 1 ? (a.back() - a.front()) / static_cast<double>(a.size() - 1) : 1.0;
    const double min_gap = 1e-3 * spacing;

    std::vector<double> xl(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(split));
    std::vector<double> yl(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(split));
    if (!xl.empty() && t - xl.back() < min_gap) {
      xl.pop_back();
      yl.pop_back();
    }
    xl.push_back(t);
    yl.push_back(field.jump->below);

    std::vector<double> xr{t};
    std::vector<double> yr{field.jump->above};
    std::size_t first = split;
    if (first < a.size() && a[first] == t) ++first;  // node on the characteristic carries `above`
    else if (first < a.size() && a[first] - t < min_gap) ++first;
    xr.insert(xr.end(), a.begin() + static_cast<std::ptrdiff_t>(first), a.end());
    yr.insert(yr.end(), v.begin() + static_cast<std::ptrdiff_t>(first), v.end());

    r.mass_grid = simpson(xl, yl) + simpson(xr, yr);
  }
  r.relative_error =
      std::abs(r.mass_grid + r.tail_mass - r.p_reference) / std::max(r.p_reference, 1e-12);
  return r;
}

}  // namespace agestruct
