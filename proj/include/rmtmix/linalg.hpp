#pragma once

// Dense Hermitian eigenproblems.

#include <Eigen/Eigenvalues>

#include "rmtmix/matrices.hpp"

namespace rmtmix::linalg {

template <typename Matrix>
struct Eigh {
  RealVector values;  // ascending
  Matrix vectors;     // columns; empty when not requested
};

template <typename Derived>
auto eigh(const Eigen::MatrixBase<Derived>& a, bool vectors) {
  using Plain = typename Derived::PlainObject;
  Eigen::SelfAdjointEigenSolver<Plain> es(a, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw DiagonalizationError("self-adjoint eigensolver did not converge", static_cast<int>(a.rows()),
                               static_cast<int>(es.info()));
  Eigh<Plain> out{es.eigenvalues(), Plain()};
  if (vectors) out.vectors = es.eigenvectors();
  return out;
}

template <typename Derived>
RealVector eigenvalues_hermitian(const Eigen::MatrixBase<Derived>& a) {
  return eigh(a, false).values;
}

}  // namespace rmtmix::linalg
