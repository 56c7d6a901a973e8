#pragma once

// Samplers for the random inputs of a mixing experiment.
//
// Normalization: diagonal entries have variance 1 and off-diagonal entries
// variance 1/2 (real and imaginary parts separately for GUE). No 1/N scaling.
// Entries are drawn row by row over the upper triangle, diagonal first in each
// row, so draw order is part of the reproducibility contract.

#include <cmath>

#include "rmtmix/matrices.hpp"
#include "rmtmix/rng.hpp"

namespace rmtmix {

namespace detail {

inline void require_dimension(Eigen::Index n, Eigen::Index minimum, const char* what) {
  if (n < minimum)
    throw InvalidDimension(std::string(what) + ": dimension " + std::to_string(n) + " < " + std::to_string(minimum));
}

}  // namespace detail

inline RealSymmetricMatrix sample_goe(Eigen::Index n, RngStream& rng) {
  detail::require_dimension(n, 2, "sample_goe");
  const double off = std::sqrt(0.5);
  RealMatrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = standard_normal(rng);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double x = off * standard_normal(rng);
      h(i, j) = x;
      h(j, i) = x;
    }
  }
  return RealSymmetricMatrix(std::move(h));
}

inline RealAntisymmetricMatrix sample_antisymmetric(Eigen::Index n, RngStream& rng) {
  detail::require_dimension(n, 2, "sample_antisymmetric");
  const double off = std::sqrt(0.5);
  RealMatrix a = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double x = off * standard_normal(rng);
      a(i, j) = x;
      a(j, i) = -x;
    }
  }
  return RealAntisymmetricMatrix(std::move(a));
}

/// H = S + i alpha A. Hermitian by construction.
inline HermitianMatrix crossover_hamiltonian(const RealSymmetricMatrix& s, const RealAntisymmetricMatrix& a,
                                             double alpha) {
  if (s.dim() != a.dim())
    throw ShapeError("crossover_hamiltonian: dimension mismatch " + std::to_string(s.dim()) + " vs " +
                     std::to_string(a.dim()));
  ComplexMatrix h(s.dim(), s.dim());
  h.real() = s.entries();
  h.imag() = alpha * a.entries();
  return HermitianMatrix(std::move(h));
}

inline HermitianMatrix sample_gue(Eigen::Index n, RngStream& rng) {
  detail::require_dimension(n, 2, "sample_gue");
  const double off = std::sqrt(0.5);
  ComplexMatrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = Complex(standard_normal(rng), 0.0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double re = off * standard_normal(rng);
      const double im = off * standard_normal(rng);
      h(i, j) = Complex(re, im);
      h(j, i) = Complex(re, -im);
    }
  }
  return HermitianMatrix(std::move(h));
}

/// Real Gaussian amplitudes (mean 0, variance 1), normalized.
inline PureState sample_real_state(Eigen::Index n, RngStream& rng) {
  detail::require_dimension(n, 1, "sample_real_state");
  ComplexVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(standard_normal(rng), 0.0);
  return PureState::normalized(std::move(v));
}

inline PureState basis_state(Eigen::Index n, Eigen::Index k) {
  detail::require_dimension(n, 1, "basis_state");
  if (k < 0 || k >= n)
    throw IndexError("basis_state: index " + std::to_string(k) + " outside [0, " + std::to_string(n) + ")");
  ComplexVector v = ComplexVector::Zero(n);
  v(k) = 1.0;
  return PureState(std::move(v));
}

}  // namespace rmtmix
