#include <benchmark/benchmark.h>

#include <random>

#include "agestruct/oracle.hpp"
#include "agestruct/reconstruct.hpp"
#include "agestruct/stability.hpp"

using namespace agestruct;

namespace {

ModelParams params_of_order(std::size_t n) {
  ModelParams p{std::vector<double>(n, 1.0), 0.5, 0.5, 4.0, false};
  return with_normalized_betas(p);
}

const Feedback kFeedback{PhiSpec::hill(1.0, 1.0), PsiSpec::linear(1.0)};

void BM_Rhs(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto params = params_of_order(n);
  const StateVector x{1.2, std::vector<double>(n, 0.5)};
  for (auto _ : state) benchmark::DoNotOptimize(rhs(x, params, kFeedback));
}
BENCHMARK(BM_Rhs)->Arg(1)->Arg(4)->Arg(16);

void BM_SteadyState(benchmark::State& state) {
  const auto params = params_of_order(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(steady_state(params, kFeedback));
}
BENCHMARK(BM_SteadyState)->Arg(1)->Arg(8);

void BM_Integrate(benchmark::State& state) {
  const auto params = params_of_order(2);
  const auto p0 = InitialDensity::exponential(1.0, 1.0);
  const auto init = density_moments(p0, params.rho, params.n());
  const auto times = uniform_times(50.0, 1001);
  IntegratorSettings s;
  s.method = state.range(0) == 0 ? IntegratorSettings::Method::rk45 : IntegratorSettings::Method::rk4;
  s.h = 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(integrate(init, params, kFeedback, 50.0, s, times));
}
BENCHMARK(BM_Integrate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Reconstruct(benchmark::State& state) {
  const auto params = params_of_order(1);
  const auto p0 = InitialDensity::exponential(1.0, 1.0);
  const auto traj = integrate(density_moments(p0, params.rho, 1), params, kFeedback, 20.0, {}, uniform_times(20.0, 201));
  const auto ages = default_age_grid(traj, p0, params);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_density(traj, p0, params, kFeedback, 10.0, ages));
}
BENCHMARK(BM_Reconstruct)->Unit(benchmark::kMicrosecond);

void BM_Eigenvalues(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Matrix m(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) m(r, c) = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(eigenvalues(m));
}
BENCHMARK(BM_Eigenvalues)->Arg(2)->Arg(8)->Arg(32);

void BM_Oracle(benchmark::State& state) {
  const auto model = separable_model(params_of_order(1), kFeedback, InitialDensity::exponential(1.65, 1.5));
  OracleSettings s;
  s.t_end = 1.0;
  s.dt = 0.004;
  s.force_general = state.range(0) == 1;
  for (auto _ : state) benchmark::DoNotOptimize(volterra_solve(model, s));
}
BENCHMARK(BM_Oracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
