#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "bifrank/constraint_set.hpp"
#include "bifrank/lmo.hpp"
#include "bifrank/projection.hpp"
#include "bifrank/rng.hpp"

namespace {

bifrank::Point random_square(int n) {
  bifrank::RngStream rng(0, bifrank::StreamId::Data);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = rng.normal();
  }
  return bifrank::Point(m);
}

void BM_NuclearLmo(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const bifrank::Point d = random_square(n);
  const auto set = bifrank::ConstraintSet::nuclear_ball(n, n, 1.0);
  bifrank::RngStream rng(0, bifrank::StreamId::Lmo);
  for (auto _ : state) benchmark::DoNotOptimize(bifrank::lmo(set, d, &rng));
}

void BM_NuclearProjection(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const bifrank::Point d = random_square(n);
  const auto set = bifrank::ConstraintSet::nuclear_ball(n, n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(bifrank::project(set, d));
}

void BM_L1Lmo(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const bifrank::Point d = random_square(n);
  const auto set = bifrank::ConstraintSet::l1_ball(n * n, 1.0);
  const bifrank::Point v = bifrank::Point::from_vector(d.flat());
  for (auto _ : state) benchmark::DoNotOptimize(bifrank::lmo(set, v));
}

void BM_L1Projection(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const bifrank::Point d = random_square(n);
  const auto set = bifrank::ConstraintSet::l1_ball(n * n, 1.0);
  const bifrank::Point v = bifrank::Point::from_vector(d.flat());
  for (auto _ : state) benchmark::DoNotOptimize(bifrank::project(set, v));
}

}  // namespace

BENCHMARK(BM_NuclearLmo)->Arg(50)->Arg(100)->Arg(250)->Arg(500)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_NuclearProjection)->Arg(50)->Arg(100)->Arg(250)->Arg(500)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_L1Lmo)->Arg(50)->Arg(250)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_L1Projection)->Arg(50)->Arg(250)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
