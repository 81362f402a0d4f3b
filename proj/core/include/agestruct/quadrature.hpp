#pragma once

#include <span>

namespace agestruct {

/// Composite trapezoid rule on arbitrary (increasing) nodes.
double trapezoid(std::span<const double> x, std::span<const double> y);

/// Composite Simpson rule on arbitrary (increasing) nodes. Interval pairs use the
/// uneven-spacing Simpson formula; an odd trailing interval gets the three-point
/// end correction, so the rule is exact for quadratics on any grid of >= 3 nodes.
double simpson(std::span<const double> x, std::span<const double> y);

}  // namespace agestruct
