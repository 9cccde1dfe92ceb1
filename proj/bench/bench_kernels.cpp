// Serial reference vs. OpenMP kernels.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "twoflow/ftl.hpp"
#include "twoflow/kernels.hpp"

using namespace twoflow;

namespace {

const FdConfig kFd = FdConfig::motorway();

std::vector<TwoClassState> cells(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TwoClassState> c(n);
  for (auto& s : c) {
    s.rho_H = u(rng) * kFd.rho_H_max;
    s.rho_L = u(rng) * fd::rho_star_L(s.rho_H, kFd);
  }
  return c;
}

template <Exec E>
void BM_InteriorFluxes(benchmark::State& st) {
  const auto c = cells(static_cast<std::size_t>(st.range(0)));
  std::vector<ClassFlux> f(c.size() + 1);
  for (auto _ : st) {
    kernels::interior_fluxes(E, c, kFd, f);
    benchmark::DoNotOptimize(f.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <Exec E>
void BM_ConservativeUpdate(benchmark::State& st) {
  auto c = cells(static_cast<std::size_t>(st.range(0)));
  std::vector<ClassFlux> f(c.size() + 1);
  kernels::interior_fluxes_serial(c, kFd, f);
  for (auto _ : st) {
    // Zero ratio keeps the state fixed across iterations.
    kernels::conservative_update(E, c, f, 0.0, true, true);
    benchmark::DoNotOptimize(c.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <Exec E>
void BM_Accelerations(benchmark::State& st) {
  Fleet fleet;
  const auto n = static_cast<std::size_t>(st.range(0));
  for (std::size_t k = 0; k < n; ++k) fleet.trucks.push_back({static_cast<TruckId>(k), 0.05 * double(k), 80.0, 0, 0});
  std::vector<double> rho(n / 2 + 2, 60.0);
  const ftl::CarField field{rho, 0.1};
  std::vector<double> a(n);
  const auto micro = MicroConfig::motorway();
  for (auto _ : st) {
    if constexpr (E == Exec::Parallel)
      ftl::accelerations_parallel(fleet, field, micro, kFd, a);
    else
      ftl::accelerations_serial(fleet, field, micro, kFd, a);
    benchmark::DoNotOptimize(a.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK_TEMPLATE(BM_InteriorFluxes, Exec::Serial)->Range(1 << 10, 1 << 20);
BENCHMARK_TEMPLATE(BM_InteriorFluxes, Exec::Parallel)->Range(1 << 10, 1 << 20);
BENCHMARK_TEMPLATE(BM_ConservativeUpdate, Exec::Serial)->Range(1 << 10, 1 << 20);
BENCHMARK_TEMPLATE(BM_ConservativeUpdate, Exec::Parallel)->Range(1 << 10, 1 << 20);
BENCHMARK_TEMPLATE(BM_Accelerations, Exec::Serial)->Range(1 << 10, 1 << 17);
BENCHMARK_TEMPLATE(BM_Accelerations, Exec::Parallel)->Range(1 << 10, 1 << 17);

BENCHMARK_MAIN();
