#pragma once

// Unitary propagation of a pure state and the incoherent mixture
//   rho(t) = (1/L) sum_l |psi_l(t)><psi_l(t)|,   |psi_l(t)> = exp(-i H_l t) |psi0>.
//
// Two propagators share one interface (`evaluate(t, out)`):
//   * EigenbasisPropagator: full diagonalization, phase rotation per time. Exact
//     for any t, O(N^3) setup.
//   * KrylovPropagator: Lanczos basis grown from |psi0> until the a-posteriori
//     error at the largest requested time drops below tolerance. O(m N^2) setup
//     with m << N whenever t_max * ||H|| is O(1), which is the regime of the
//     GOE mixing grids (Nt <= 10).
// Both are built once per Hamiltonian and then evaluated on the whole time grid.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rmtmix/linalg.hpp"
#include "rmtmix/matrices.hpp"

namespace rmtmix {

template <typename Scalar>
using MatrixOf = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorOf = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Eigenpairs of a Hermitian matrix; column k of `eigenvectors` pairs with `eigenvalues(k)`.
template <typename Scalar>
struct SpectralDecomposition {
  RealVector eigenvalues;
  MatrixOf<Scalar> eigenvectors;

  Eigen::Index dim() const { return eigenvalues.size(); }
};

inline SpectralDecomposition<double> decompose(const RealSymmetricMatrix& h) {
  auto e = linalg::eigh(h.entries(), true);
  return {std::move(e.values), std::move(e.vectors)};
}

inline SpectralDecomposition<Complex> decompose(const HermitianMatrix& h) {
  auto e = linalg::eigh(h.entries(), true);
  return {std::move(e.values), std::move(e.vectors)};
}

namespace detail {

inline void require_nonnegative_time(double t) {
  if (!(t >= 0.0)) throw DomainError("propagation time must be >= 0, got " + std::to_string(t));
}

inline ComplexVector phases(const RealVector& energies, double t) {
  ComplexVector p(energies.size());
  for (Eigen::Index k = 0; k < energies.size(); ++k) p(k) = std::polar(1.0, -energies(k) * t);
  return p;
}

}  // namespace detail

template <typename Scalar>
class EigenbasisPropagator {
 public:
  EigenbasisPropagator(const SpectralDecomposition<Scalar>& d, const PureState& psi0) : d_(&d) {
    if (d.dim() != psi0.dim())
      throw ShapeError("propagate: decomposition dimension " + std::to_string(d.dim()) + " vs state " +
                       std::to_string(psi0.dim()));
    overlaps_ = d.eigenvectors.adjoint().template cast<Complex>() * psi0.amplitudes();
  }

  Eigen::Index dim() const { return d_->dim(); }

  void evaluate(double t, Eigen::Ref<ComplexVector> out) const {
    detail::require_nonnegative_time(t);
    const ComplexVector rotated = detail::phases(d_->eigenvalues, t).cwiseProduct(overlaps_);
    out.noalias() = d_->eigenvectors.template cast<Complex>() * rotated;
  }

 private:
  const SpectralDecomposition<Scalar>* d_;
  ComplexVector overlaps_;
};

/// psi(t) = V exp(-i E t) V^dagger psi0.
template <typename Scalar>
PureState propagate(const SpectralDecomposition<Scalar>& d, const PureState& psi0, double t) {
  EigenbasisPropagator<Scalar> p(d, psi0);
  ComplexVector out(d.dim());
  p.evaluate(t, out);
  return PureState(std::move(out));
}

struct KrylovOptions {
  double tolerance = 1e-13;
  /// Maximum basis size; 0 means the full dimension.
  Eigen::Index max_dimension = 0;
};

/// Lanczos representation psi(t) ~= Q exp(-i T t) e_1 valid on [0, t_max].
template <typename Scalar>
class KrylovPropagator {
 public:
  Eigen::Index dim() const { return basis_.rows(); }
  Eigen::Index krylov_dimension() const { return basis_.cols(); }
  double t_max() const { return t_max_; }
  double error_estimate() const { return error_estimate_; }

  void evaluate(double t, Eigen::Ref<ComplexVector> out) const {
    detail::require_nonnegative_time(t);
    if (t > t_max_ * (1.0 + 1e-12))
      throw DomainError("KrylovPropagator: t = " + std::to_string(t) + " beyond certified t_max = " +
                        std::to_string(t_max_));
    const ComplexVector small = ritz_vectors_ * detail::phases(ritz_values_, t).cwiseProduct(first_row_);
    out.noalias() = basis_.template cast<Complex>() * small;
  }

  /// Builds the basis; returns nullopt if max_dimension is reached before the
  /// error estimate at t_max falls below tolerance.
  template <typename HamiltonianMatrix>
  static std::optional<KrylovPropagator> build(const HamiltonianMatrix& h, const VectorOf<Scalar>& psi0, double t_max,
                                               KrylovOptions options = {});

 private:
  MatrixOf<Scalar> basis_;
  RealVector ritz_values_;
  ComplexMatrix ritz_vectors_;
  ComplexVector first_row_;
  double t_max_ = 0.0;
  double error_estimate_ = 0.0;
};

namespace detail {

// |(exp(-i T t))_{m-1,0}| from the eigenpairs of the tridiagonal T.
inline double corner_of_exponential(const Eigen::SelfAdjointEigenSolver<RealMatrix>& es, double t) {
  const RealMatrix& w = es.eigenvectors();
  const Eigen::Index m = w.rows();
  Complex acc = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) acc += w(m - 1, k) * std::polar(1.0, -es.eigenvalues()(k) * t) * w(0, k);
  return std::abs(acc);
}

}  // namespace detail

template <typename Scalar>
template <typename HamiltonianMatrix>
std::optional<KrylovPropagator<Scalar>> KrylovPropagator<Scalar>::build(const HamiltonianMatrix& h,
                                                                        const VectorOf<Scalar>& psi0, double t_max,
                                                                        KrylovOptions options) {
  detail::require_nonnegative_time(t_max);
  const Eigen::Index n = h.rows();
  if (h.cols() != n || psi0.size() != n) throw ShapeError("KrylovPropagator: dimension mismatch");
  const Eigen::Index cap = options.max_dimension > 0 ? std::min(options.max_dimension, n) : n;

  MatrixOf<Scalar> q(n, cap);
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[j] couples q_j and q_{j+1}
  q.col(0) = psi0 / psi0.norm();
  VectorOf<Scalar> w(n);
  double scale = 0.0;

  Eigen::SelfAdjointEigenSolver<RealMatrix> es;
  auto solve_tridiagonal = [&](Eigen::Index m) {
    RealVector diag = Eigen::Map<const RealVector>(alpha.data(), m);
    RealVector sub = m > 1 ? RealVector(Eigen::Map<const RealVector>(beta.data(), m - 1)) : RealVector();
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  };

  Eigen::Index m = 0;
  double estimate = 0.0;
  bool converged = false;
  for (Eigen::Index j = 0; j < cap; ++j) {
    w.noalias() = h * q.col(j);
    const double a = std::real(q.col(j).dot(w));
    alpha.push_back(a);
    w -= a * q.col(j);
    if (j > 0) w -= beta[j - 1] * q.col(j - 1);
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      const VectorOf<Scalar> proj = q.leftCols(j + 1).adjoint() * w;
      w.noalias() -= q.leftCols(j + 1) * proj;
    }
    const double b = w.norm();
    m = j + 1;
    scale = std::max({scale, std::abs(a), b});

    if (b <= 1e-13 * scale || m == n) {
      // Invariant subspace: the representation is exact.
      estimate = 0.0;
      converged = true;
      break;
    }
    const bool check = m < 32 || m % std::max<Eigen::Index>(1, m / 8) == 0 || m == cap;
    if (check) {
      solve_tridiagonal(m);
      estimate = b * detail::corner_of_exponential(es, t_max);
      if (estimate < options.tolerance) {
        converged = true;
        break;
      }
    }
    beta.push_back(b);
    if (j + 1 < cap) q.col(j + 1) = w / b;
  }
  if (!converged) return std::nullopt;

  solve_tridiagonal(m);
  KrylovPropagator out;
  out.basis_ = q.leftCols(m);
  out.ritz_values_ = es.eigenvalues();
  out.ritz_vectors_ = es.eigenvectors().template cast<Complex>();
  out.first_row_ = es.eigenvectors().row(0).transpose().template cast<Complex>() * psi0.norm();
  out.t_max_ = t_max;
  out.error_estimate_ = estimate;
  return out;
}

/// Mixed state with time stamp. Hermitian and unit trace within kTolerance.
class DensityMatrix {
 public:
  static constexpr double kTolerance = 1e-10;

  DensityMatrix(ComplexMatrix entries, double time) : m_(std::move(entries)), time_(time) {
    detail::require_square(m_.rows(), m_.cols(), "DensityMatrix");
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kTolerance) throw DomainError("DensityMatrix: not Hermitian");
    if (std::abs(m_.trace() - Complex(1.0)) > kTolerance) throw DomainError("DensityMatrix: trace differs from 1");
  }

  Eigen::Index dim() const { return m_.rows(); }
  const ComplexMatrix& entries() const { return m_; }
  double time() const { return time_; }

 private:
  ComplexMatrix m_;
  double time_;
};

/// Ascending eigenvalues of rho.
inline RealVector spectrum(const DensityMatrix& rho) { return linalg::eigenvalues_hermitian(rho.entries()); }

inline double purity(const DensityMatrix& rho) { return rho.entries().squaredNorm(); }

/// Checks trace, Hermiticity and positivity; returns the smallest eigenvalue.
struct DensityInvariants {
  double trace_error;
  double hermiticity_error;
  double min_eigenvalue;
  bool ok(double tol = DensityMatrix::kTolerance) const {
    return trace_error <= tol && hermiticity_error <= tol && min_eigenvalue >= -tol;
  }
};

inline DensityInvariants check_invariants(const DensityMatrix& rho) {
  const ComplexMatrix& m = rho.entries();
  return {std::abs(m.trace() - Complex(1.0)), (m - m.adjoint()).cwiseAbs().maxCoeff(), spectrum(rho).minCoeff()};
}

/// Accumulates propagated states member by member and assembles rho on a time grid.
class MixedStateBuilder {
 public:
  MixedStateBuilder(PureState psi0, std::vector<double> times, Eigen::Index ensemble_size,
                    bool allow_size_override = false)
      : psi0_(std::move(psi0)), times_(std::move(times)), members_(ensemble_size) {
    if (times_.empty()) throw ConfigError("MixedStateBuilder: empty time grid");
    for (std::size_t k = 0; k < times_.size(); ++k) {
      if (!(times_[k] >= 0.0)) throw ConfigError("MixedStateBuilder: negative time in grid");
      if (k > 0 && !(times_[k] > times_[k - 1])) throw ConfigError("MixedStateBuilder: time grid not strictly increasing");
    }
    if (members_ < 1) throw ConfigError("MixedStateBuilder: ensemble must have at least one member");
    if (members_ != psi0_.dim() && !allow_size_override)
      throw ConfigError("ensemble size " + std::to_string(members_) + " differs from dimension " +
                        std::to_string(psi0_.dim()));
    columns_.assign(times_.size(), ComplexMatrix(psi0_.dim(), members_));
  }

  const PureState& initial_state() const { return psi0_; }
  const std::vector<double>& times() const { return times_; }
  double max_time() const { return times_.back(); }
  Eigen::Index added() const { return next_; }

  template <typename Propagator>
  void add(const Propagator& p) {
    if (next_ >= members_) throw ConfigError("MixedStateBuilder: more members than the declared ensemble size");
    if (p.dim() != psi0_.dim()) throw ShapeError("MixedStateBuilder: propagator dimension mismatch");
    for (std::size_t k = 0; k < times_.size(); ++k) p.evaluate(times_[k], columns_[k].col(next_));
    ++next_;
  }

  /// rho(t_k) = Psi_k Psi_k^dagger / L, mirrored from the lower triangle so it is
  /// exactly Hermitian.
  DensityMatrix density_at(std::size_t k) const {
    if (next_ != members_)
      throw ConfigError("MixedStateBuilder: " + std::to_string(next_) + " of " + std::to_string(members_) +
                        " members added");
    const Eigen::Index n = psi0_.dim();
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    rho.selfadjointView<Eigen::Lower>().rankUpdate(columns_.at(k), 1.0 / static_cast<double>(members_));
    for (Eigen::Index j = 0; j < n; ++j) {
      rho(j, j) = Complex(rho(j, j).real(), 0.0);
      for (Eigen::Index i = j + 1; i < n; ++i) rho(j, i) = std::conj(rho(i, j));
    }
    return DensityMatrix(std::move(rho), times_[k]);
  }

  std::vector<DensityMatrix> finish() const {
    std::vector<DensityMatrix> out;
    out.reserve(times_.size());
    for (std::size_t k = 0; k < times_.size(); ++k) out.push_back(density_at(k));
    return out;
  }

 private:
  PureState psi0_;
  std::vector<double> times_;
  Eigen::Index members_;
  Eigen::Index next_ = 0;
  std::vector<ComplexMatrix> columns_;
};

/// rho(t) from a full list of decompositions. The list length must equal the
/// dimension unless `allow_size_override` is set.
template <typename Scalar>
DensityMatrix mixed_state(std::span<const SpectralDecomposition<Scalar>> ensemble, const PureState& psi0, double t,
                          bool allow_size_override = false) {
  MixedStateBuilder builder(psi0, {t}, static_cast<Eigen::Index>(ensemble.size()), allow_size_override);
  for (const auto& d : ensemble) builder.add(EigenbasisPropagator<Scalar>(d, psi0));
  return builder.finish().front();
}

template <typename Scalar>
DensityMatrix mixed_state(const std::vector<SpectralDecomposition<Scalar>>& ensemble, const PureState& psi0, double t,
                          bool allow_size_override = false) {
  return mixed_state(std::span<const SpectralDecomposition<Scalar>>(ensemble), psi0, t, allow_size_override);
}

}  // namespace rmtmix
