#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// version; every output element is computed by the same expression in both, so
// results agree bit for bit.

#include <span>

#include "twoflow/ctm.hpp"
#include "twoflow/exec.hpp"
#include "twoflow/fd.hpp"

namespace twoflow::kernels {

/// out[i] = flux between cells[i-1] and cells[i], for 1 <= i < cells.size().
/// out must have cells.size() + 1 entries; out[0] and out.back() are untouched.
void interior_fluxes_serial(std::span<const TwoClassState> cells, const FdConfig& cfg,
                            std::span<ClassFlux> out);
void interior_fluxes_parallel(std::span<const TwoClassState> cells, const FdConfig& cfg,
                              std::span<ClassFlux> out);

/// cells[i] += ratio * (fluxes[i] - fluxes[i+1]) for the selected classes.
void conservative_update_serial(std::span<TwoClassState> cells, std::span<const ClassFlux> fluxes,
                                double ratio, bool evolve_L, bool evolve_H);
void conservative_update_parallel(std::span<TwoClassState> cells,
                                  std::span<const ClassFlux> fluxes, double ratio, bool evolve_L,
                                  bool evolve_H);

inline void interior_fluxes(Exec exec, std::span<const TwoClassState> cells, const FdConfig& cfg,
                            std::span<ClassFlux> out) {
  if (exec == Exec::Parallel)
    interior_fluxes_parallel(cells, cfg, out);
  else
    interior_fluxes_serial(cells, cfg, out);
}

inline void conservative_update(Exec exec, std::span<TwoClassState> cells,
                                std::span<const ClassFlux> fluxes, double ratio, bool evolve_L,
                                bool evolve_H) {
  if (exec == Exec::Parallel)
    conservative_update_parallel(cells, fluxes, ratio, evolve_L, evolve_H);
  else
    conservative_update_serial(cells, fluxes, ratio, evolve_L, evolve_H);
}

/// Below this many elements the parallel kernels run on one thread.
inline constexpr std::ptrdiff_t kParallelThreshold = 512;

}  // namespace twoflow::kernels
