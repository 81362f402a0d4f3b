#pragma once

#include <optional>
#include <span>
#include <vector>

#include "agestruct/density.hpp"
#include "agestruct/feedback.hpp"
#include "agestruct/model.hpp"
#include "agestruct/reduce.hpp"

namespace agestruct {

/// One-sided limits of p(., t) across the characteristic a = t.
struct CharacteristicJump {
  double age = 0.0;
  double below = 0.0;  ///< birth branch, a -> t-
  double above = 0.0;  ///< initial-data branch, a -> t+
  double size() const;
};

struct DensityField {
  std::vector<double> ages;
  double time = 0.0;
  std::vector<double> values;
  std::optional<CharacteristicJump> jump;  ///< set when 0 < t < last age
  double tail_mass = 0.0;                  ///< mass estimate beyond the last age
};

/// p(a,t) along characteristics: p0(a - t) S(0,t) for a >= t and
/// B(t - a) S(t - a, t) for a < t, with S the survival over the elapsed time.
DensityField reconstruct_density(const Trajectory& traj, const InitialDensity& p0,
                                 const ModelParams& params, const Feedback& feedback, double t,
                                 std::span<const double> ages);

/// [0, a_max] with step `step`, where e^{-mu0 a_max} (mass + sup B) < 1e-10.
std::vector<double> default_age_grid(const Trajectory& traj, const InitialDensity& p0,
                                     const ModelParams& params, double step = 0.01);

struct ConsistencyReport {
  double time = 0.0;
  double mass_grid = 0.0;   ///< Simpson integral over the grid, split at the characteristic
  double tail_mass = 0.0;
  double p_reference = 0.0; ///< P(t) from the trajectory
  double relative_error = 0.0;
};

ConsistencyReport consistency_check(const DensityField& field, const Trajectory& traj);

}  // namespace agestruct
