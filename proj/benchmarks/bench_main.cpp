#include <benchmark/benchmark.h>

#include "mslab/estimators.hpp"
#include "mslab/laws.hpp"
#include "mslab/microstates.hpp"
#include "mslab/random.hpp"

namespace {

void BM_HaarUnitary(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  mslab::StreamEngine rng({1, 0});
  for (auto _ : state) benchmark::DoNotOptimize(mslab::haar_unitary(n, rng));
}
BENCHMARK(BM_HaarUnitary)->Arg(3)->Arg(16)->Arg(64);

void BM_OrbitalMembership(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  const auto marginal = mslab::two_point_law(1.0, -1.0, 0.5, m);
  const auto joint = mslab::free_product_law({marginal, marginal}, m);
  const auto base = mslab::diagonalized_base(joint, n);
  const mslab::MicrostateParams params{n, m, 0.2};
  mslab::StreamEngine rng({2, 0});
  for (auto _ : state) {
    const auto u = mslab::sample_unitary_tuple(2, n, rng);
    benchmark::DoNotOptimize(mslab::orbital_membership(base, u, joint, params, mslab::Scan::Full));
  }
}
BENCHMARK(BM_OrbitalMembership)->Args({3, 3})->Args({32, 3})->Args({64, 6});

void BM_FreeProduct(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const auto a = mslab::semicircular_law(1.0, m);
  const auto b = mslab::two_point_law(1.0, 0.0, 0.3, m);
  for (auto _ : state) benchmark::DoNotOptimize(mslab::free_product_law({a, b}, m));
}
BENCHMARK(BM_FreeProduct)->Arg(4)->Arg(8);

void BM_BrownianStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mslab::brownian_unitary({n, 0.5, 1, {3, k++}}));
}
BENCHMARK(BM_BrownianStep)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
