#pragma once

// Strongly typed matrix and state wrappers. Each type validates its structural
// invariant on construction so downstream code can rely on it.

#include <cmath>
#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "rmtmix/error.hpp"

namespace rmtmix {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

namespace detail {

inline void require_square(Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (rows != cols || rows < 1) {
    throw ShapeError(std::string(what) + ": expected a non-empty square matrix, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

}  // namespace detail

class RealSymmetricMatrix {
 public:
  /// Throws ShapeError unless `entries` is square and exactly symmetric.
  explicit RealSymmetricMatrix(RealMatrix entries) : m_(std::move(entries)) {
    detail::require_square(m_.rows(), m_.cols(), "RealSymmetricMatrix");
    for (Eigen::Index j = 0; j < m_.cols(); ++j)
      for (Eigen::Index i = j + 1; i < m_.rows(); ++i)
        if (m_(i, j) != m_(j, i)) throw ShapeError("RealSymmetricMatrix: entries are not symmetric");
  }

  Eigen::Index dim() const { return m_.rows(); }
  const RealMatrix& entries() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  RealMatrix m_;
};

class RealAntisymmetricMatrix {
 public:
  explicit RealAntisymmetricMatrix(RealMatrix entries) : m_(std::move(entries)) {
    detail::require_square(m_.rows(), m_.cols(), "RealAntisymmetricMatrix");
    for (Eigen::Index j = 0; j < m_.cols(); ++j) {
      if (m_(j, j) != 0.0) throw ShapeError("RealAntisymmetricMatrix: nonzero diagonal");
      for (Eigen::Index i = j + 1; i < m_.rows(); ++i)
        if (m_(i, j) != -m_(j, i)) throw ShapeError("RealAntisymmetricMatrix: entries are not antisymmetric");
    }
  }

  Eigen::Index dim() const { return m_.rows(); }
  const RealMatrix& entries() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  RealMatrix m_;
};

class HermitianMatrix {
 public:
  static constexpr double kTolerance = 1e-12;

  /// Accepts entries Hermitian to kTolerance (absolute, per element).
  explicit HermitianMatrix(ComplexMatrix entries) : m_(std::move(entries)) {
    detail::require_square(m_.rows(), m_.cols(), "HermitianMatrix");
    for (Eigen::Index j = 0; j < m_.cols(); ++j)
      for (Eigen::Index i = j; i < m_.rows(); ++i)
        if (std::abs(m_(i, j) - std::conj(m_(j, i))) > kTolerance)
          throw ShapeError("HermitianMatrix: entries are not Hermitian");
  }

  explicit HermitianMatrix(const RealSymmetricMatrix& s) : m_(s.entries().cast<Complex>()) {}

  Eigen::Index dim() const { return m_.rows(); }
  const ComplexMatrix& entries() const { return m_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  /// True when every imaginary part is exactly zero.
  bool is_real() const { return m_.imag().cwiseAbs().maxCoeff() == 0.0; }

 private:
  ComplexMatrix m_;
};

/// Normalized state vector.
class PureState {
 public:
  static constexpr double kTolerance = 1e-12;

  /// Throws DomainError unless the amplitudes have unit norm within kTolerance.
  explicit PureState(ComplexVector amplitudes) : a_(std::move(amplitudes)) {
    if (a_.size() < 1) throw InvalidDimension("PureState: empty amplitude vector");
    if (std::abs(a_.squaredNorm() - 1.0) > kTolerance) throw DomainError("PureState: amplitudes are not normalized");
  }

  /// Normalizes `v`; throws DomainError for a zero vector.
  static PureState normalized(ComplexVector v) {
    const double n = v.norm();
    if (!(n > 0.0)) throw DomainError("PureState: cannot normalize a zero vector");
    v /= n;
    return PureState(std::move(v));
  }

  Eigen::Index dim() const { return a_.size(); }
  const ComplexVector& amplitudes() const { return a_; }
  Complex operator()(Eigen::Index i) const { return a_(i); }
  bool is_real() const { return a_.imag().cwiseAbs().maxCoeff() == 0.0; }

 private:
  ComplexVector a_;
};

}  // namespace rmtmix
