#include "agestruct/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agestruct/error.hpp"
#include "agestruct/quadrature.hpp"
#include "agestruct/steady.hpp"

namespace agestruct {

GeneralModel separable_model(const ModelParams& params, const Feedback& feedback,
                             const InitialDensity& p0) {
  GeneralModel model;
  model.p0 = p0;
  model.mortality = [mu0 = params.mu0, feedback](double, double p) { return mu0 + feedback.psi(p); };
  model.fertility = [params, feedback](double a, double p) {
    return params.r0 * feedback.phi(p) * fertility_age_profile(a, params);
  };
  GeneralModel::Separable sep;
  sep.mu0 = params.mu0;
  sep.psi = [feedback](double p) { return feedback.psi(p); };
  sep.size_factor = [r0 = params.r0, feedback](double p) { return r0 * feedback.phi(p); };
  sep.age_factor = [params](double a) { return fertility_age_profile(a, params); };
  model.separable = std::move(sep);
  return model;
}

double PopulationHistory::operator()(double t) const {
  const double slack = 1e-9 * dt;
  if (values.empty() || t < -slack || t > end_time() + slack)
    throw RangeError("population history does not cover t=" + std::to_string(t));
  const double u = std::clamp(t / dt, 0.0, static_cast<double>(values.size() - 1));
  const auto k = static_cast<std::size_t>(std::floor(u));
  if (k + 1 >= values.size()) return values.back();
  const double w = u - static_cast<double>(k);
  return (1.0 - w) * values[k] + w * values[k + 1];
}

double survival_factor(double age, double t, double lookback, const PopulationHistory& history,
                       const GeneralModel& model) {
  if (!(lookback >= 0.0)) throw DomainError("survival_factor: lookback must be nonnegative");
  if (lookback > age + 1e-12 * std::max(1.0, age))
    throw DomainError("survival_factor: lookback exceeds the age");
  if (lookback == 0.0) return 1.0;
  const double slack = 1e-9 * history.dt;
  if (t - lookback < -slack || t > history.end_time() + slack)
    throw RangeError("survival_factor: history does not cover [t - x, t]");

  const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(lookback / history.dt - 1e-9)));
  const double h = lookback / static_cast<double>(m);
  double integral = 0.0;
  for (std::size_t k = 0; k <= m; ++k) {
    const double s = h * static_cast<double>(k);
    const double w = (k == 0 || k == m) ? 0.5 : 1.0;
    integral += w * model.mortality(std::max(0.0, age - s), history(std::max(0.0, t - s)));
  }
  return std::exp(-h * integral);
}

namespace {

struct Iterate {
  std::vector<double> b;
  std::vector<double> p;
};

class VolterraOperator {
 public:
  VolterraOperator(const GeneralModel& model, const OracleSettings& s) : model_(model) {
    if (!(s.t_end > 0.0) || !(s.dt > 0.0) || !(s.tol > 0.0))
      throw DomainError("volterra_solve: t_end, dt and tol must be positive");
    if (!model.mortality || !model.fertility)
      throw DomainError("volterra_solve: mortality and fertility evaluators are required");
    dt_ = s.dt;
    if (s.t_end < s.dt) {
      nodes_ = 1;
    } else {
      const double ratio = s.t_end / s.dt;
      const double rounded = std::round(ratio);
      if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw DomainError("volterra_solve: dt must divide t_end");
      nodes_ = static_cast<std::size_t>(rounded) + 1;
    }
    separable_ = model.separable.has_value() && !s.force_general;
    if (separable_) prepare_separable();
    else prepare_general();
  }

  std::size_t nodes() const { return nodes_; }
  double dt() const { return dt_; }

  Iterate seed() const {
    const std::vector<double> frozen(nodes_, model_.p0.mass());
    Iterate it;
    it.b.assign(nodes_, 0.0);
    it.p.assign(nodes_, 0.0);
    initial_terms(frozen, it.b, it.p);
    return it;
  }

  Iterate apply(const Iterate& cur) const {
    Iterate next;
    next.b.assign(nodes_, 0.0);
    next.p.assign(nodes_, 0.0);
    initial_terms(cur.p, next.b, next.p);
    if (separable_) renewal_separable(cur, next);
    else renewal_general(cur, next);
    for (std::size_t j = 0; j < nodes_; ++j) {
      next.b[j] = std::max(0.0, next.b[j]);
      next.p[j] = std::max(0.0, next.p[j]);
    }
    return next;
  }

 private:
  double time(std::size_t j) const { return dt_ * static_cast<double>(j); }

  // Initial cohorts on the same grid density_moments uses: the table itself, or
  // [0, support_end] with step at most 0.01.
  void initial_grid() {
    if (model_.p0.kind() == InitialDensity::Kind::tabulated) {
      initial_ages_ = model_.p0.ages();
      initial_density_ = model_.p0.values();
      return;
    }
    const double end = std::max(model_.p0.support_end(), 1.0);
    const auto count = static_cast<std::size_t>(std::max(200.0, std::ceil(end / 0.01)));
    for (std::size_t k = 0; k <= count; ++k) {
      initial_ages_.push_back(end * static_cast<double>(k) / static_cast<double>(count));
      initial_density_.push_back(model_.p0(initial_ages_.back()));
    }
  }

  // Separable: M_j = int age_factor(a0 + t_j) p0(a0) da0, fixed across iterations.
  void prepare_separable() {
    const auto& sep = *model_.separable;
    initial_grid();
    mass_ = model_.p0.mass();
    shifted_fertility_.resize(nodes_);
    std::vector<double> integrand(initial_ages_.size());
    for (std::size_t j = 0; j < nodes_; ++j) {
      for (std::size_t k = 0; k < initial_ages_.size(); ++k)
        integrand[k] = initial_density_[k] == 0.0
                           ? 0.0
                           : sep.age_factor(initial_ages_[k] + time(j)) * initial_density_[k];
      shifted_fertility_[j] = simpson(initial_ages_, integrand);
    }
    age_factor_.resize(nodes_);
    decay_.resize(nodes_);
    for (std::size_t l = 0; l < nodes_; ++l) {
      age_factor_[l] = sep.age_factor(time(l));
      decay_[l] = std::exp(-sep.mu0 * time(l));
    }
  }

  void prepare_general() { initial_grid(); }

  std::vector<double> cumulative_psi(std::span<const double> p) const {
    const auto& sep = *model_.separable;
    std::vector<double> c(nodes_, 0.0);
    double prev = sep.psi(p[0]);
    for (std::size_t j = 1; j < nodes_; ++j) {
      const double cur = sep.psi(p[j]);
      c[j] = c[j - 1] + 0.5 * dt_ * (prev + cur);
      prev = cur;
    }
    return c;
  }

  // F(t, P) and G(t, P): contributions of the cohorts alive at time zero.
  void initial_terms(std::span<const double> p, std::span<double> f, std::span<double> g) const {
    if (separable_) {
      const auto& sep = *model_.separable;
      const std::vector<double> c = cumulative_psi(p);
      for (std::size_t j = 0; j < nodes_; ++j) {
        const double survival = decay_[j] * std::exp(-c[j]);
        f[j] = sep.size_factor(p[j]) * survival * shifted_fertility_[j];
        g[j] = survival * mass_;
      }
      return;
    }
    // Each initial cohort carries its own accumulated mortality through the time grid.
    const std::size_t q_count = initial_ages_.size();
    std::vector<double> hazard(q_count, 0.0);
    std::vector<double> prev_mu(q_count);
    std::vector<double> births(q_count);
    std::vector<double> survivors(q_count);
    for (std::size_t q = 0; q < q_count; ++q) prev_mu[q] = model_.mortality(initial_ages_[q], p[0]);
    for (std::size_t j = 0; j < nodes_; ++j) {
      const double t = time(j);
      for (std::size_t q = 0; q < q_count; ++q) {
        const double age = initial_ages_[q] + t;
        if (j > 0) {
          const double mu = model_.mortality(age, p[j]);
          hazard[q] += 0.5 * dt_ * (prev_mu[q] + mu);
          prev_mu[q] = mu;
        }
        survivors[q] = initial_density_[q] == 0.0 ? 0.0 : std::exp(-hazard[q]) * initial_density_[q];
        births[q] = survivors[q] == 0.0 ? 0.0 : model_.fertility(age, p[j]) * survivors[q];
      }
      f[j] = simpson(initial_ages_, births);
      g[j] = simpson(initial_ages_, survivors);
    }
  }

  void renewal_separable(const Iterate& cur, Iterate& next) const {
    const auto& sep = *model_.separable;
    const std::vector<double> c = cumulative_psi(cur.p);
    // pi(l, j) = decay_l exp(C_{j-l} - C_j); factor through w_m = exp(C_m) when safe.
    const bool factored = c.back() < 600.0;
    std::vector<double> weighted(nodes_);
    if (factored)
      for (std::size_t m = 0; m < nodes_; ++m) weighted[m] = std::exp(c[m]) * cur.b[m];

    for (std::size_t j = 1; j < nodes_; ++j) {
      double sum_b = 0.0;
      double sum_p = 0.0;
      for (std::size_t l = 0; l <= j; ++l) {
        const double w = (l == 0 || l == j) ? 0.5 : 1.0;
        const double born = factored ? weighted[j - l] : std::exp(c[j - l] - c[j]) * cur.b[j - l];
        const double term = w * decay_[l] * born;
        sum_p += term;
        sum_b += term * age_factor_[l];
      }
      const double scale = factored ? dt_ * std::exp(-c[j]) : dt_;
      next.b[j] += sep.size_factor(cur.p[j]) * scale * sum_b;
      next.p[j] += scale * sum_p;
    }
  }

  void renewal_general(const Iterate& cur, Iterate& next) const {
    // hazard[l]: accumulated mortality of the cohort aged l dt at time j dt.
    std::vector<double> hazard{0.0};
    std::vector<double> prev_mu{model_.mortality(0.0, cur.p[0])};
    for (std::size_t j = 1; j < nodes_; ++j) {
      std::vector<double> h(j + 1, 0.0);
      std::vector<double> mu(j + 1);
      for (std::size_t l = 0; l <= j; ++l) mu[l] = model_.mortality(time(l), cur.p[j]);
      for (std::size_t l = 1; l <= j; ++l) h[l] = hazard[l - 1] + 0.5 * dt_ * (prev_mu[l - 1] + mu[l]);
      double sum_b = 0.0;
      double sum_p = 0.0;
      for (std::size_t l = 0; l <= j; ++l) {
        const double w = (l == 0 || l == j) ? 0.5 : 1.0;
        const double term = w * std::exp(-h[l]) * cur.b[j - l];
        sum_p += term;
        sum_b += term * model_.fertility(time(l), cur.p[j]);
      }
      next.b[j] += dt_ * sum_b;
      next.p[j] += dt_ * sum_p;
      hazard.swap(h);
      prev_mu.swap(mu);
    }
  }

  const GeneralModel& model_;
  double dt_ = 0.0;
  std::size_t nodes_ = 1;
  bool separable_ = false;
  double mass_ = 0.0;
  std::vector<double> shifted_fertility_;
  std::vector<double> age_factor_;
  std::vector<double> decay_;
  std::vector<double> initial_ages_;
  std::vector<double> initial_density_;
};

double sup_change(const Iterate& a, const Iterate& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.b.size(); ++j) {
    d = std::max(d, std::abs(a.b[j] - b.b[j]));
    d = std::max(d, std::abs(a.p[j] - b.p[j]));
  }
  return d;
}

}  // namespace

OracleSolution volterra_solve(const GeneralModel& model, const OracleSettings& settings,
                              const IterationLog& log) {
  const VolterraOperator op(model, settings);
  // Stops at the first iterate whose image moves by at most tol, so re-applying
  // the map to the returned solution reproduces the reported update.
  Iterate cur = op.seed();
  double update = HUGE_VAL;
  std::size_t k = 0;
  while (k < settings.k_max) {
    Iterate next = op.apply(cur);
    update = sup_change(next, cur);
    ++k;
    if (log) log(k, update);
    if (update <= settings.tol) break;
    cur = std::move(next);
  }
  if (!(update <= settings.tol))
    throw NonConvergenceError("volterra_solve: no convergence after " + std::to_string(k) +
                                  " iterations (last update " + std::to_string(update) + ")",
                              update);

  OracleSolution sol;
  sol.dt = op.dt();
  sol.times.resize(op.nodes());
  for (std::size_t j = 0; j < op.nodes(); ++j) sol.times[j] = op.dt() * static_cast<double>(j);
  sol.b = std::move(cur.b);
  sol.p = std::move(cur.p);
  sol.iterations = k;
  sol.final_update = update;
  return sol;
}

double oracle_update_norm(const GeneralModel& model, const OracleSettings& settings,
                          std::span<const double> b, std::span<const double> p) {
  const VolterraOperator op(model, settings);
  if (b.size() != op.nodes() || p.size() != op.nodes())
    throw DomainError("oracle_update_norm: iterate does not match the grid");
  Iterate cur{{b.begin(), b.end()}, {p.begin(), p.end()}};
  return sup_change(op.apply(cur), cur);
}

CrossValidationReport cross_validate(const ModelParams& params, const Feedback& feedback,
                                     const InitialDensity& p0, const OracleSettings& oracle,
                                     const IntegratorSettings& integrator, const IterationLog& log) {
  validate(params);
  CrossValidationReport report;
  report.oracle = volterra_solve(separable_model(params, feedback, p0), oracle, log);
  report.oracle_iterations = report.oracle.iterations;
  report.oracle_update = report.oracle.final_update;

  const StateVector initial = density_moments(p0, params.rho, params.n());
  const auto& times = report.oracle.times;
  if (times.size() < 2) {
    report.gap_p = std::abs(initial.p - report.oracle.p[0]);
    report.gap_b = std::abs(birth_rate(initial, params, feedback) - report.oracle.b[0]);
    return report;
  }
  report.ode = integrate(initial, params, feedback, times.back(), integrator, times);
  for (std::size_t j = 0; j < times.size(); ++j) {
    report.gap_p = std::max(report.gap_p, std::abs(report.ode.states[j].p - report.oracle.p[j]));
    report.gap_b = std::max(report.gap_b, std::abs(report.ode.birth_rates[j] - report.oracle.b[j]));
  }
  return report;
}

}  // namespace agestruct
