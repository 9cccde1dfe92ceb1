#include "twoflow/kernels.hpp"

#include <algorithm>

namespace twoflow::kernels {

namespace {

inline void update_cell(TwoClassState& c, const ClassFlux& in, const ClassFlux& out, double ratio,
                        bool evolve_L, bool evolve_H) {
  if (evolve_L) c.rho_L = std::max(0.0, c.rho_L + ratio * (in.L - out.L));
  if (evolve_H) c.rho_H = std::max(0.0, c.rho_H + ratio * (in.H - out.H));
}

}  // namespace

void interior_fluxes_serial(std::span<const TwoClassState> cells, const FdConfig& cfg,
                            std::span<ClassFlux> out) {
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
  for (std::ptrdiff_t i = 1; i < n; ++i) out[i] = ctm::interface_flux(cells[i - 1], cells[i], cfg);
}

void interior_fluxes_parallel(std::span<const TwoClassState> cells, const FdConfig& cfg,
                              std::span<ClassFlux> out) {
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::ptrdiff_t i = 1; i < n; ++i) out[i] = ctm::interface_flux(cells[i - 1], cells[i], cfg);
}

void conservative_update_serial(std::span<TwoClassState> cells, std::span<const ClassFlux> fluxes,
                                double ratio, bool evolve_L, bool evolve_H) {
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
  for (std::ptrdiff_t i = 0; i < n; ++i)
    update_cell(cells[i], fluxes[i], fluxes[i + 1], ratio, evolve_L, evolve_H);
}

void conservative_update_parallel(std::span<TwoClassState> cells,
                                  std::span<const ClassFlux> fluxes, double ratio, bool evolve_L,
                                  bool evolve_H) {
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    update_cell(cells[i], fluxes[i], fluxes[i + 1], ratio, evolve_L, evolve_H);
}

}  // namespace twoflow::kernels
