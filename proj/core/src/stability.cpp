#include "agestruct/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "agestruct/error.hpp"

namespace agestruct {

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::asymptotically_stable:
      return "asymptotically stable";
    case Verdict::unstable:
      return "unstable";
    case Verdict::marginal:
      return "marginal";
  }
  return "unknown";
}

Matrix jacobian_at(const StateVector& state, const ModelParams& params, const Feedback& feedback) {
  const std::size_t n = params.n();
  if (state.n() != n) throw DomainError("jacobian_at: state dimension does not match n");
  const double p = state.p;
  const double phi = feedback.phi(p);
  const double dphi = feedback.phi_prime(p);
  const double psi = feedback.psi(p);
  const double dpsi = feedback.psi_prime(p);
  const double d = params.rho + params.mu0 + psi;

  double weighted = 0.0;  // Sum beta_i P_{i+1}
  for (std::size_t i = 0; i < n; ++i) weighted += params.betas[i] * state.moments[i];
  const double dbirth_dp = params.r0 * dphi * weighted;

  Matrix j(n + 1, n + 1);
  j(0, 0) = -(params.mu0 + psi) - dpsi * p + dbirth_dp;
  for (std::size_t i = 0; i < n; ++i) j(0, i + 1) = params.r0 * phi * params.betas[i];

  j(1, 0) = dbirth_dp - dpsi * state.moments[0];
  for (std::size_t i = 0; i < n; ++i) j(1, i + 1) = params.r0 * phi * params.betas[i];
  j(1, 1) -= d;

  for (std::size_t i = 1; i < n; ++i) {
    j(i + 1, 0) = -dpsi * state.moments[i];
    j(i + 1, i) = static_cast<double>(i);
    j(i + 1, i + 1) = -d;
  }
  return j;
}

namespace {

void balance(Matrix& a) {
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  const std::size_t n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      double c = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        g = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Reduction to upper Hessenberg form by stabilized elementary similarity transforms.
void hessenberg(Matrix& a) {
  const std::size_t n = a.rows();
  for (std::size_t m = 1; m + 1 < n; ++m) {
    double x = 0.0;
    std::size_t piv = m;
    for (std::size_t j = m; j < n; ++j) {
      if (std::abs(a(j, m - 1)) > std::abs(x)) {
        x = a(j, m - 1);
        piv = j;
      }
    }
    if (piv != m) {
      for (std::size_t j = m - 1; j < n; ++j) std::swap(a(piv, j), a(m, j));
      for (std::size_t j = 0; j < n; ++j) std::swap(a(j, piv), a(j, m));
    }
    if (x == 0.0) continue;
    for (std::size_t i = m + 1; i < n; ++i) {
      double y = a(i, m - 1);
      if (y == 0.0) continue;
      y /= x;
      a(i, m - 1) = 0.0;
      for (std::size_t j = m; j < n; ++j) a(i, j) -= y * a(m, j);
      for (std::size_t j = 0; j < n; ++j) a(j, m) += y * a(j, i);
    }
  }
  for (std::size_t i = 2; i < n; ++i)
    for (std::size_t j = 0; j + 1 < i; ++j) a(i, j) = 0.0;
}

double sign_of(double magnitude, double s) { return s >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude); }

// Francis double-shift QR on an upper Hessenberg matrix. Indices are 1-based
// inside (h(i, j) maps to a(i-1, j-1)) to keep the bulge-chasing bounds readable.
std::vector<std::complex<double>> hessenberg_qr(Matrix& a, double deflation_tol, std::size_t max_sweeps) {
  const int n = static_cast<int>(a.rows());
  auto h = [&a](int i, int j) -> double& { return a(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)); };

  std::vector<double> wr(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> wi(static_cast<std::size_t>(n) + 1, 0.0);
  const auto found = [&](int nn) {
    std::vector<std::complex<double>> out;
    for (int i = nn + 1; i <= n; ++i) out.emplace_back(wr[static_cast<std::size_t>(i)], wi[static_cast<std::size_t>(i)]);
    return out;
  };

  double anorm = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(h(i, j));

  int nn = n;
  double shift = 0.0;
  std::size_t sweeps = 0;
  while (nn >= 1) {
    int its = 0;
    int l = 1;
    do {
      for (l = nn; l >= 2; --l) {
        double s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(h(l, l - 1)) <= deflation_tol * s) {
          h(l, l - 1) = 0.0;
          break;
        }
      }
      double x = h(nn, nn);
      if (l == nn) {  // one root
        wr[static_cast<std::size_t>(nn)] = x + shift;
        wi[static_cast<std::size_t>(nn)] = 0.0;
        --nn;
      } else {
        double y = h(nn - 1, nn - 1);
        double w = h(nn, nn - 1) * h(nn - 1, nn);
        if (l == nn - 1) {  // two roots
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += shift;
          const auto a1 = static_cast<std::size_t>(nn - 1);
          const auto a2 = static_cast<std::size_t>(nn);
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            wr[a1] = wr[a2] = x + z;
            if (z != 0.0) wr[a2] = x - w / z;
            wi[a1] = wi[a2] = 0.0;
          } else {
            wr[a1] = wr[a2] = x + p;
            wi[a1] = -z;
            wi[a2] = z;
          }
          nn -= 2;
        } else {
          if (++sweeps > max_sweeps)
            throw EigenvalueError("eigenvalues: QR iteration did not converge", found(nn));
          if (its > 0 && its % 10 == 0) {  // exceptional shift
            shift += x;
            for (int i = 1; i <= nn; ++i) h(i, i) -= x;
            const double s = std::abs(h(nn, nn - 1)) + std::abs(h(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (; m >= l; --m) {
            z = h(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - w) / h(m + 1, m) + h(m, m + 1);
            q = h(m + 1, m + 1) - z - r - s;
            r = h(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(z) + std::abs(h(m + 1, m + 1)));
            if (u <= 1e-16 * v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            h(i, i - 2) = 0.0;
            if (i != m + 2) h(i, i - 3) = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = h(k, k - 1);
              q = h(k + 1, k - 1);
              r = 0.0;
              if (k != nn - 1) r = h(k + 2, k - 1);
              x = std::abs(p) + std::abs(q) + std::abs(r);
              if (x != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) h(k, k - 1) = -h(k, k - 1);
            } else {
              h(k, k - 1) = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              p = h(k, j) + q * h(k + 1, j);
              if (k != nn - 1) {
                p += r * h(k + 2, j);
                h(k + 2, j) -= p * z;
              }
              h(k + 1, j) -= p * y;
              h(k, j) -= p * x;
            }
            const int mmin = std::min(nn, k + 3);
            for (int i = l; i <= mmin; ++i) {
              p = x * h(i, k) + y * h(i, k + 1);
              if (k != nn - 1) {
                p += z * h(i, k + 2);
                h(i, k + 2) -= p * r;
              }
              h(i, k + 1) -= p * q;
              h(i, k) -= p;
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  return found(0);
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw DomainError("eigenvalues: matrix must be square");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j))) throw DomainError("eigenvalues: matrix has non-finite entries");
  if (m.rows() == 0) return {};

  Matrix a = m;
  balance(a);
  hessenberg(a);
  auto ev = hessenberg_qr(a, 1e-12, 100 * (m.rows() + 1));
  std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  return ev;
}

StabilityReport classify_matrix(const Matrix& m, double margin) {
  StabilityReport r;
  r.jacobian = m;
  r.trace = m.trace();
  r.eigenvalues = eigenvalues(m);
  r.spectral_abscissa = -HUGE_VAL;
  for (const auto& ev : r.eigenvalues) r.spectral_abscissa = std::max(r.spectral_abscissa, ev.real());
  if (std::abs(r.spectral_abscissa) <= margin)
    r.verdict = Verdict::marginal;
  else
    r.verdict = r.spectral_abscissa < 0.0 ? Verdict::asymptotically_stable : Verdict::unstable;
  return r;
}

StabilityReport classify(const EquilibriumReport& equilibrium, const ModelParams& params,
                         const Feedback& feedback, double margin) {
  const StateVector state =
      equilibrium.exists ? equilibrium.state() : StateVector{0.0, std::vector<double>(params.n(), 0.0)};
  return classify_matrix(jacobian_at(state, params, feedback), margin);
}

}  // namespace agestruct
