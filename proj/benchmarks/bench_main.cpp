#include <benchmark/benchmark.h>

#include <chaoswave/kernels.hpp>
#include <chaoswave/noise.hpp>
#include <chaoswave/solver.hpp>
#include <chaoswave/spectral.hpp>

namespace cw = chaoswave;

namespace {

const cw::CovarianceModel& model() {
  static cw::CovarianceModel m = cw::CovarianceModel::riesz(0.75, 0.5);
  return m;
}

void BM_KM(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(model().KM(4.0));
}
BENCHMARK(BM_KM);

void BM_MaxPrinciple(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(cw::max_principle_m(model(), 1.0, 1.0));
}
BENCHMARK(BM_MaxPrinciple);

void BM_Alpha1(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(cw::alpha1(model(), 1.0));
}
BENCHMARK(BM_Alpha1);

void BM_Alpha2(benchmark::State& state) {
  const int cells = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(cw::alpha2(model(), 1.0, cells));
}
BENCHMARK(BM_Alpha2)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_Factorize(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  cw::GridSpec g{1.0, 1.0, n, n};
  for (auto _ : state) {
    cw::CellCovariance cov = cw::build_covariance(model(), g);
    cw::factorize(cov);
    benchmark::DoNotOptimize(cov.F_time.L(0, 0));
  }
}
BENCHMARK(BM_Factorize)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_NoiseSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  cw::GridSpec g{1.0, 1.0, n, n};
  cw::CellCovariance cov = cw::build_covariance(model(), g);
  cw::factorize(cov);
  cw::NoiseGenerator gen(cov, 1);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(gen.sample(i++).increments(0, 0));
}
BENCHMARK(BM_NoiseSample)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_ProjectKernels(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  cw::GridSpec g{1.0, 1.0, n, n};
  cw::CellCovariance cov = cw::build_covariance(model(), g);
  cw::factorize(cov);
  for (auto _ : state) {
    const cw::ChaosCoefficients co =
        cw::project_kernels(model(), cov, 1.0, 0.0, 2);
    benchmark::DoNotOptimize(co.V2(0, 1));
  }
}
BENCHMARK(BM_ProjectKernels)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SolutionSample(benchmark::State& state) {
  cw::GridSpec g{1.0, 1.0, 16, 16};
  cw::CellCovariance cov = cw::build_covariance(model(), g);
  cw::factorize(cov);
  const cw::ChaosCoefficients co =
      cw::project_kernels(model(), cov, 1.0, 0.0, 2);
  cw::NoiseGenerator gen(cov, 1);
  std::uint64_t i = 0;
  for (auto _ : state) {
    const Eigen::VectorXd zeta = gen.normals(i++);
    benchmark::DoNotOptimize(cw::sample_solution(co, zeta).value);
  }
}
BENCHMARK(BM_SolutionSample)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
