#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <random>

#include "agestruct/density.hpp"
#include "agestruct/error.hpp"
#include "agestruct/feedback.hpp"
#include "agestruct/model.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace agestruct;
using namespace agestruct::testing;

TEST_CASE("normalize_betas examples") {
  SUBCASE("n=1 forces beta0 = rho + mu0") {
    const std::vector<double> raw{7.0};
    const auto b = normalize_betas(raw, 0.5, 0.5);
    CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("n=2 hand sum S = 2") {
    const std::vector<double> raw{1.0, 1.0};
    CHECK(normalization_sum(raw, 0.5, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
    const auto b = normalize_betas(raw, 0.5, 0.5);
    CHECK(b[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(b[1] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("already normalized input is unchanged") {
    const std::vector<double> raw{0.5, 0.5};
    CHECK(normalize_betas(raw, 0.5, 0.5) == raw);
  }
  SUBCASE("non-positive input is a domain error") {
    const std::vector<double> bad{1.0, -1.0};
    CHECK_THROWS_AS(normalize_betas(bad, 0.5, 0.5), DomainError);
    const std::vector<double> ok{1.0};
    CHECK_THROWS_AS(normalize_betas(ok, 0.0, 0.5), DomainError);
    CHECK_THROWS_AS(normalize_betas(ok, 0.5, -1.0), DomainError);
  }
}

TEST_CASE("normalize_betas property: identity holds and is scale invariant") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> n_dist(1, 8);
  std::uniform_real_distribution<double> beta(0.01, 10.0);
  std::uniform_real_distribution<double> rate(0.05, 3.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(static_cast<std::size_t>(n_dist(rng)));
    for (double& b : raw) b = beta(rng);
    const double rho = rate(rng);
    const double mu0 = rate(rng);
    const auto b = normalize_betas(raw, rho, mu0);
    CHECK(std::abs(normalization_sum(b, rho, mu0) - 1.0) <= 1e-12);

    const double s = scale(rng);
    std::vector<double> scaled = raw;
    for (double& v : scaled) v *= s;
    const auto b2 = normalize_betas(scaled, rho, mu0);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(rel_err(b2[i], b[i]) <= 1e-12);
  }
}

TEST_CASE("validate names the offending field") {
  ModelParams p = ref2();
  p.betas[1] = -1.0;
  try {
    validate(p);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("betas[1]") != std::string::npos);
  }
  p = ref1();
  p.rho = 0.0;
  CHECK_THROWS_AS(validate(p), DomainError);
  p = ref1();
  p.betas.clear();
  CHECK_THROWS_AS(validate(p), DomainError);
  CHECK_NOTHROW(validate(ref2()));
}

TEST_CASE("fertility_age_profile") {
  CHECK(fertility_age_profile(0.0, ref2()) == doctest::Approx(0.5));
  CHECK(fertility_age_profile(0.0, ModelParams{{3.0, 9.0, 1.0}, 0.7, 0.1, 1.0}) == 3.0);
  CHECK(fertility_age_profile(2.0, ref1()) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(fertility_age_profile(2.0, ref2()) == doctest::Approx(1.5 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(fertility_age_profile(200.0, ref2()) < 1e-40);
  CHECK_THROWS_AS(fertility_age_profile(-0.1, ref1()), DomainError);
}

namespace {

// Least squares through Eigen's column-pivoted QR; independent of the normal equations.
Eigen::VectorXd qr_fit(const std::vector<double>& ages, const std::vector<double>& values,
                       std::size_t n, double rho) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(ages.size()), static_cast<Eigen::Index>(n));
  Eigen::VectorXd y(static_cast<Eigen::Index>(ages.size()));
  for (std::size_t k = 0; k < ages.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i)
      a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          std::pow(ages[k], static_cast<double>(i)) * std::exp(-rho * ages[k]);
    y(static_cast<Eigen::Index>(k)) = values[k];
  }
  return a.colPivHouseholderQr().solve(y);
}

}  // namespace

TEST_CASE("fit_fertility_profile") {
  std::vector<double> ages(10);
  for (std::size_t k = 0; k < ages.size(); ++k) ages[k] = 0.5 * static_cast<double>(k);

  SUBCASE("exact recovery") {
    const ModelParams truth{{0.5, 0.5}, 0.5, 0.5, 1.0};
    std::vector<double> f;
    for (double a : ages) f.push_back(fertility_age_profile(a, truth));
    const auto fit = fit_fertility_profile(ages, f, 2, 0.5);
    CHECK(std::abs(fit.betas[0] - 0.5) <= 1e-8);
    CHECK(std::abs(fit.betas[1] - 0.5) <= 1e-8);
    CHECK(fit.residual_norm <= 1e-10);
  }
  SUBCASE("zero profile") {
    const std::vector<double> zero(ages.size(), 0.0);
    const auto fit = fit_fertility_profile(ages, zero, 3, 0.5);
    for (double b : fit.betas) CHECK(b == 0.0);
    CHECK(fit.residual_norm == 0.0);
  }
  SUBCASE("e^{-a} with n=3 against an independent QR solve") {
    std::vector<double> f;
    for (double a : ages) f.push_back(std::exp(-a));
    const auto fit = fit_fertility_profile(ages, f, 3, 0.5);
    const Eigen::VectorXd ref = qr_fit(ages, f, 3, 0.5);
    double ref_ss = 0.0;
    for (std::size_t k = 0; k < ages.size(); ++k) {
      double model = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(fit.betas[i] - ref(static_cast<Eigen::Index>(i))) <= 1e-8);
        model += ref(static_cast<Eigen::Index>(i)) * std::pow(ages[k], static_cast<double>(i)) *
                 std::exp(-0.5 * ages[k]);
      }
      ref_ss += (f[k] - model) * (f[k] - model);
    }
    CHECK(std::abs(fit.residual_norm - std::sqrt(ref_ss)) <= 1e-10);
  }
  SUBCASE("rank deficiency") {
    const std::vector<double> two{1.0, 2.0};
    const std::vector<double> vals{0.3, 0.1};
    CHECK_THROWS_AS(fit_fertility_profile(two, vals, 3, 0.5), SingularFitError);
    const std::vector<double> same{1.0, 1.0, 1.0};
    const std::vector<double> v3{0.3, 0.3, 0.3};
    CHECK_THROWS_AS(fit_fertility_profile(same, v3, 2, 0.5), SingularFitError);
  }
}

TEST_CASE("feedback families") {
  const Feedback hill{PhiSpec::hill(1.0, 1.0), PsiSpec::linear(1.0)};
  CHECK(hill.phi(1.0) == doctest::Approx(0.5));
  CHECK(hill.phi_prime(1.0) == doctest::Approx(-0.25));
  CHECK(hill.psi(3.0) == doctest::Approx(3.0));
  CHECK(hill.psi_prime(3.0) == doctest::Approx(1.0));

  const Feedback expo{PhiSpec::exponential(2.0), PsiSpec::power(0.5, 2.0)};
  CHECK(expo.phi(2.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(expo.psi(3.0) == doctest::Approx(4.5));
  CHECK(expo.psi_prime(3.0) == doctest::Approx(3.0));

  const Feedback lin = Feedback::linear_mode();
  CHECK(lin.phi(5.0) == 1.0);
  CHECK(lin.psi(5.0) == 0.0);
  CHECK(lin.phi_prime(5.0) == 0.0);

  CHECK_THROWS_AS(Feedback(PhiSpec::hill(0.0), PsiSpec::linear(1.0)), DomainError);
  CHECK_THROWS_AS(Feedback(PhiSpec::hill(1.0, 0.5), PsiSpec::linear(1.0)), DomainError);
  CHECK_THROWS_AS(Feedback(PhiSpec::exponential(1.0), PsiSpec::power(1.0, 0.9)), DomainError);
  CHECK_THROWS_AS(Feedback(PhiSpec::exponential(1.0), PsiSpec::linear(-2.0)), DomainError);
}

TEST_CASE("feedback derivatives match central differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> xs(0.01, 100.0);
  for (int cfg = 0; cfg < 20; ++cfg) {
    const Feedback fb = random_feedback(rng);
    for (int k = 0; k < 100; ++k) {
      const double x = xs(rng);
      const double h = 1e-6 * std::max(1.0, std::abs(x));
      const double dphi = (fb.phi(x + h) - fb.phi(x - h)) / (2.0 * h);
      const double dpsi = (fb.psi(x + h) - fb.psi(x - h)) / (2.0 * h);
      if (std::abs(fb.phi_prime(x)) > 1e-250) CHECK(rel_err(dphi, fb.phi_prime(x)) <= 1e-6);
      CHECK(rel_err(dpsi, fb.psi_prime(x)) <= 1e-6);
    }
  }
}

TEST_CASE("check_assumptions") {
  const std::vector<double> grid{0.0, 1.0, 10.0};
  SUBCASE("hill phi and linear psi pass") {
    const auto r = check_assumptions(Feedback{PhiSpec::hill(1.0, 1.0), PsiSpec::linear(1.0)}, grid);
    CHECK(r.all_passed());
    CHECK(r.clauses.size() == 8);
  }
  SUBCASE("steep hill and power psi pass despite zero slope at the origin") {
    const auto r = check_assumptions(Feedback{PhiSpec::hill(2.0, 3.0), PsiSpec::power(1.0, 2.0)}, grid);
    CHECK(r.all_passed());
  }
  SUBCASE("constant phi outside linear mode is flagged") {
    const Feedback fb{PhiSpec::custom([](double) { return 1.0; }, [](double) { return 0.0; }),
                      PsiSpec::linear(1.0)};
    const auto r = check_assumptions(fb, grid);
    CHECK_FALSE(r.all_passed());
    REQUIRE(r.find("phi'(x)<0") != nullptr);
    CHECK_FALSE(r.find("phi'(x)<0")->passed);
    CHECK(r.find("phi'(x)<0")->violating_point == 1.0);
    CHECK_FALSE(r.find("phi(+inf)=0")->passed);
    CHECK(r.find("phi(0)=1")->passed);
    CHECK(r.find("psi'(x)>0")->passed);
  }
  SUBCASE("psi with nonzero intercept fails psi(0)=0") {
    const Feedback fb{PhiSpec::hill(1.0),
                      PsiSpec::custom([](double x) { return 1.0 + x; }, [](double) { return 1.0; })};
    const auto r = check_assumptions(fb, grid);
    CHECK_FALSE(r.find("psi(0)=0")->passed);
    CHECK(r.find("psi(x)>=0")->passed);
  }
  SUBCASE("linear mode is exempt") {
    CHECK(check_assumptions(Feedback::linear_mode(), grid).all_passed());
  }
}

TEST_CASE("initial density") {
  const auto e = InitialDensity::exponential(2.0, 0.5);
  CHECK(e(0.0) == 2.0);
  CHECK(e(-1.0) == 0.0);
  CHECK(e.mass() == doctest::Approx(4.0));
  CHECK(e.mass_beyond(2.0) == doctest::Approx(4.0 * std::exp(-1.0)));

  const auto t = InitialDensity::tabulated({0.0, 1.0, 2.0}, {1.0, 1.0, 1.0});
  CHECK(t(1.5) == 1.0);
  CHECK(t(2.5) == 0.0);
  CHECK(t.mass() == doctest::Approx(2.0));
  CHECK(t.mass_beyond(0.5) == doctest::Approx(1.5));

  CHECK_THROWS_AS(InitialDensity::exponential(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(InitialDensity::exponential(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(InitialDensity::tabulated({0.0, 0.0}, {1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(InitialDensity::tabulated({0.0, 1.0}, {1.0, -1.0}), DomainError);
}

TEST_CASE("density_moments") {
  SUBCASE("exponential closed form") {
    const auto s = density_moments(InitialDensity::exponential(1.0, 1.0), 0.5, 2);
    CHECK(s.p == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.moments[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.moments[1] == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  }
  SUBCASE("zero density") {
    const auto s = density_moments(InitialDensity::zero(), 0.5, 3);
    CHECK(s.p == 0.0);
    for (double m : s.moments) CHECK(m == 0.0);
  }
  SUBCASE("tabulated e^{-a} on [0,40] step 0.01 matches the closed form") {
    std::vector<double> ages;
    std::vector<double> vals;
    for (int k = 0; k <= 4000; ++k) {
      ages.push_back(0.01 * k);
      vals.push_back(std::exp(-ages.back()));
    }
    const auto tab = density_moments(InitialDensity::tabulated(ages, vals), 0.5, 4);
    const auto exact = density_moments(InitialDensity::exponential(1.0, 1.0), 0.5, 4);
    CHECK(rel_err(tab.p, exact.p) <= 1e-6);
    for (std::size_t i = 0; i < 4; ++i) CHECK(rel_err(tab.moments[i], exact.moments[i]) <= 1e-6);
  }
  SUBCASE("tabulated error decreases under refinement") {
    const auto exact = density_moments(InitialDensity::exponential(1.0, 1.0), 0.5, 3);
    double prev = HUGE_VAL;
    for (double step : {0.4, 0.2, 0.1, 0.05}) {
      std::vector<double> ages;
      std::vector<double> vals;
      for (int k = 0; k * step <= 40.0 + 1e-12; ++k) {
        ages.push_back(step * k);
        vals.push_back(std::exp(-ages.back()));
      }
      const auto tab = density_moments(InitialDensity::tabulated(ages, vals), 0.5, 3);
      const double err = rel_err(tab.moments[2], exact.moments[2]);
      CHECK(err < prev);
      prev = err;
    }
  }
  SUBCASE("forced numeric quadrature agrees with the closed form") {
    const auto p0 = InitialDensity::exponential(1.5, 1.5);
    const auto num = density_moments(p0, 0.5, 3, {.force_numeric = true});
    const auto exact = density_moments(p0, 0.5, 3);
    CHECK(rel_err(num.p, exact.p) <= 1e-10);
    for (std::size_t i = 0; i < 3; ++i) CHECK(rel_err(num.moments[i], exact.moments[i]) <= 1e-10);
  }
}
