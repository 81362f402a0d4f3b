#include "agestruct/quadrature.hpp"

#include <stdexcept>

namespace agestruct {

double trapezoid(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) s += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
  return s;
}

namespace {

// int_{x0}^{x2} of the interpolating parabola through three nodes.
double simpson_pair(double h0, double h1, double f0, double f1, double f2) {
  const double hs = h0 + h1;
  return hs / 6.0 * ((2.0 - h1 / h0) * f0 + hs * hs / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2);
}

// int_{x1}^{x2} of the parabola through (x0, x1, x2).
double simpson_last(double h0, double h1, double f0, double f1, double f2) {
  const double a = (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
  const double b = (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
  const double c = (h1 * h1 * h1) / (6.0 * h0 * (h0 + h1));
  return a * f2 + b * f1 - c * f0;
}

}  // namespace

double simpson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("simpson: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);

  double s = 0.0;
  std::size_t k = 0;
  for (; k + 2 < n; k += 2)
    s += simpson_pair(x[k + 1] - x[k], x[k + 2] - x[k + 1], y[k], y[k + 1], y[k + 2]);
  if (k + 1 < n)
    s += simpson_last(x[k] - x[k - 1], x[k + 1] - x[k], y[k - 1], y[k], y[k + 1]);
  return s;
}

}  // namespace agestruct
