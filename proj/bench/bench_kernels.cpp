// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include "kronic/control.hpp"
#include "kronic/features.hpp"
#include "kronic/systems.hpp"

using namespace kronic;

namespace {

const Eigen::Vector3d kInertia(1.0, 0.5, 1.0 / 3.0);

const TrajectoryDataset & dataset()
{
  static const auto d = concatenate(integrate_ensemble(rigid_body_system(kInertia), sample_momentum_shell(0.5, 1.5, 114, 0),
                                                       nullptr, 10.0, 0.01));
  return d;
}

IntrinsicModel model()
{
  const auto dict = Dictionary::monomials(3, 3);
  Eigen::MatrixXd Xi = Eigen::MatrixXd::Zero(dict.size(), 2);
  for (int i = 0; i < 3; ++i) {
    MultiIndex a{0, 0, 0};
    a[static_cast<std::size_t>(i)] = 2;
    const auto k = *dict.index_of(a);
    Xi(k, 0) = 0.5;
    Xi(k, 1) = 0.5 / kInertia[i];
  }
  return {dict, Xi, Eigen::Matrix3d::Identity()};
}

MpcConfig mpc()
{
  MpcConfig c;
  c.Q = Eigen::Vector2d(2.0, 2.0).asDiagonal();
  c.R = 1e-3 * Eigen::Matrix3d::Identity();
  c.reference_state = Eigen::Vector3d(0.0, 1.0, 0.0);
  return c;
}

void BM_gamma_serial(benchmark::State & s)
{
  const auto dict = Dictionary::monomials(3, 3);
  for (auto _ : s) { benchmark::DoNotOptimize(reference::eval_gamma(dict, dataset().states, *dataset().derivatives)); }
}

void BM_gamma_omp(benchmark::State & s)
{
  const auto dict = Dictionary::monomials(3, 3);
  for (auto _ : s) { benchmark::DoNotOptimize(eval_gamma(dict, dataset().states, *dataset().derivatives)); }
}

void BM_ensemble_serial(benchmark::State & s)
{
  const auto spec = rigid_body_system(kInertia);
  const auto x0 = sample_momentum_shell(0.5, 1.5, 114, 0);
  for (auto _ : s) { benchmark::DoNotOptimize(reference::integrate_ensemble(spec, x0, nullptr, 10.0, 0.01)); }
}

void BM_ensemble_omp(benchmark::State & s)
{
  const auto spec = rigid_body_system(kInertia);
  const auto x0 = sample_momentum_shell(0.5, 1.5, 114, 0);
  for (auto _ : s) { benchmark::DoNotOptimize(integrate_ensemble(spec, x0, nullptr, 10.0, 0.01)); }
}

void BM_closed_loop_serial(benchmark::State & s)
{
  const auto spec = rigid_body_system(kInertia);
  const auto x0 = sample_momentum_sphere(0.5, 32, 2);
  const auto m = model();
  for (auto _ : s) { benchmark::DoNotOptimize(reference::run_closed_loop_ensemble(spec, mpc(), m, x0, 10.0)); }
}

void BM_closed_loop_omp(benchmark::State & s)
{
  const auto spec = rigid_body_system(kInertia);
  const auto x0 = sample_momentum_sphere(0.5, 32, 2);
  const auto m = model();
  for (auto _ : s) { benchmark::DoNotOptimize(run_closed_loop_ensemble(spec, mpc(), m, x0, 10.0)); }
}

}  // namespace

BENCHMARK(BM_gamma_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_gamma_omp)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ensemble_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ensemble_omp)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_closed_loop_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_closed_loop_omp)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
