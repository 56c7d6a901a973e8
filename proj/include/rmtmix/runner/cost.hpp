#pragma once

// Up-front resource estimate for a run:
//   flops ~ M * L * (c_setup * N^3 + c_prop * T * N^2)
// with L members per realization, T grid times and N the Hilbert dimension.
// c_setup is 15 for a dense eigendecomposition with vectors and 0.25 for the
// Lanczos path used on random-matrix grids (the basis stays far below N up to
// Nt = 10). c_prop = 8 is one complex N x N matrix-vector product. Complex
// Hamiltonians cost 4x. Constants were fitted to single-core wall times of the
// desk presets; the estimates land within a factor 2 of them.

#include <algorithm>
#include <string>
#include <thread>

#include "rmtmix/runner/config.hpp"

namespace rmtmix::runner {

inline constexpr double kDiagonalizationFlops = 15.0;
inline constexpr double kKrylovFlops = 0.25;
inline constexpr double kPropagationFlops = 8.0;
inline constexpr double kSamplingFlops = 100.0;  // per matrix entry drawn, Gaussian sampling included
inline constexpr double kComplexFactor = 4.0;
inline constexpr double kAssumedFlopRate = 1e10;  // per worker, measured on the desk presets

struct CostEstimate {
  double flops = 0.0;
  double memory_bytes = 0.0;
  double seconds = 0.0;
  int workers = 1;
};

inline CostEstimate estimate_cost(const ExperimentConfig& c, int workers = 1) {
  const double n = static_cast<double>(std::max<Eigen::Index>(c.hilbert_dimension(), 1));
  const double m = static_cast<double>(c.realizations);
  const double members = static_cast<double>(c.members());
  const double t = static_cast<double>(c.observable == Observable::hamiltonian ? 1 : c.time.count);
  CostEstimate e;
  e.workers = std::max(1, workers);

  if (c.kind == ExperimentKind::short_time_check) {
    const double per = kSamplingFlops * n * n + 2.0 * n * n;
    e.flops = m * members * per + m * 2.0 * n * n * n;
    e.memory_bytes = e.workers * 8.0 * (3.0 * n * n);
  } else if (c.observable == Observable::hamiltonian) {
    e.flops = m * (kSamplingFlops * n * n + kDiagonalizationFlops * n * n * n);
    e.memory_bytes = e.workers * 8.0 * 3.0 * n * n;
  } else {
    const bool lanczos = c.propagator != PropagatorKind::eigen && !c.is_spin();
    const double setup = (lanczos ? kKrylovFlops : kDiagonalizationFlops) * n * n * n;
    const double refresh = c.per_time_refresh ? t : 1.0;
    const double per_member = refresh * (setup + kSamplingFlops * n * n) + kPropagationFlops * t * n * n;
    // Spectra of the T density matrices per realization.
    const double complex_h = c.kind == ExperimentKind::gue_mix || c.kind == ExperimentKind::crossover_hamiltonian
                                 ? kComplexFactor
                                 : 1.0;
    e.flops = m * complex_h * (members * per_member + t * (4.0 * n * n * members + kDiagonalizationFlops * n * n * n / 2.0));
    // Propagated columns for every time plus one Hamiltonian and its eigenvectors.
    e.memory_bytes = e.workers * 16.0 * (t * n * members + 3.0 * n * n);
  }
  e.flops = std::max(e.flops, 1.0);
  e.seconds = e.flops / (kAssumedFlopRate * e.workers);
  return e;
}

inline std::string describe(const CostEstimate& e) {
  using detail::format_double;
  return "flops ~ " + format_double(e.flops) + ", memory ~ " + format_double(e.memory_bytes / 1048576.0) +
         " MiB, wall clock ~ " + format_double(e.seconds) + " s on " + std::to_string(e.workers) + " worker(s)";
}

}  // namespace rmtmix::runner
