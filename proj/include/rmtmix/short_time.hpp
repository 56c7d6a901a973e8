#pragma once

// Third-order short-time expansion of the mixed state for real symmetric
// Hamiltonians started from a basis projector |k><k|.
//
// With u = H e_k, v = H u, w = H v:
//   s1 = i(e_k u^T - u e_k^T)
//   s2 = u u^T - (v e_k^T + e_k v^T)/2
//   s3 = (i/2)(u v^T - v u^T) + (i/6)(w e_k^T - e_k w^T)
// For k = 0 the full-matrix block (rows and columns 1..N-1) of the averaged
// series is (t^2/2) 1 + (t^2/sqrt(2N)) (B - i t sqrt(N)/2 D).

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmtmix/ensembles.hpp"
#include "rmtmix/evolution.hpp"
#include "rmtmix/matrices.hpp"

namespace rmtmix {

struct SeriesTerms {
  ComplexMatrix sigma0, sigma1, sigma2, sigma3;
};

struct CrossoverMatrices {
  RealSymmetricMatrix b;
  RealAntisymmetricMatrix d;
  std::optional<std::string> warning;
};

namespace detail {

// Index k such that rho0 == |k><k| exactly; PreconditionError otherwise.
inline Eigen::Index projector_index(const DensityMatrix& rho0) {
  const ComplexMatrix& m = rho0.entries();
  Eigen::Index k = -1;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const Complex x = m(i, j);
      if (x == Complex(0.0)) continue;
      if (i != j || x != Complex(1.0) || k >= 0)
        throw PreconditionError("initial density matrix must be a basis-state projector");
      k = i;
    }
  if (k < 0) throw PreconditionError("initial density matrix must be a basis-state projector");
  return k;
}

struct KrylovTriple {
  RealVector u, v, w;
};

inline KrylovTriple powers_on_basis(const RealMatrix& h, Eigen::Index k) {
  KrylovTriple p;
  p.u = h.col(k);
  p.v = h * p.u;
  p.w = h * p.v;
  return p;
}

inline void require_ensemble(std::span<const RealSymmetricMatrix> ensemble, Eigen::Index n, const char* what) {
  if (ensemble.empty()) throw ConfigError(std::string(what) + ": empty ensemble");
  for (const auto& h : ensemble)
    if (h.dim() != n) throw ShapeError(std::string(what) + ": ensemble members differ in dimension");
}

}  // namespace detail

inline SeriesTerms series_terms(const RealSymmetricMatrix& h, const DensityMatrix& rho0) {
  if (h.dim() != rho0.dim()) throw ShapeError("series_terms: dimension mismatch");
  const Eigen::Index n = h.dim();
  const Eigen::Index k = detail::projector_index(rho0);
  const auto [u, v, w] = detail::powers_on_basis(h.entries(), k);
  const RealVector e = RealVector::Unit(n, k);
  const Complex i(0.0, 1.0);

  SeriesTerms s;
  s.sigma0 = rho0.entries();
  s.sigma1 = i * (e * u.transpose() - u * e.transpose()).cast<Complex>();
  s.sigma2 = (u * u.transpose() - 0.5 * (v * e.transpose() + e * v.transpose())).cast<Complex>();
  s.sigma3 = (0.5 * i) * (u * v.transpose() - v * u.transpose()).cast<Complex>() +
             (i / 6.0) * (w * e.transpose() - e * w.transpose()).cast<Complex>();
  return s;
}

/// (1/L) sum_l sum_{k<=3} sigma_{l,k} t^k.
inline DensityMatrix series_density(std::span<const RealSymmetricMatrix> ensemble, const DensityMatrix& rho0,
                                    double t) {
  if (!(t >= 0.0)) throw DomainError("series_density: t must be >= 0");
  const Eigen::Index n = rho0.dim();
  detail::require_ensemble(ensemble, n, "series_density");
  const Eigen::Index k = detail::projector_index(rho0);

  // Real part collects even orders, imaginary part odd orders.
  RealMatrix re = RealMatrix::Zero(n, n);
  RealMatrix im = RealMatrix::Zero(n, n);
  RealVector odd_col = RealVector::Zero(n);  // coefficient of (x e_k^T - e_k x^T) in im
  RealVector even_col = RealVector::Zero(n);  // coefficient of (x e_k^T + e_k x^T) in re
  const double t2 = t * t, t3 = t2 * t;
  for (const auto& h : ensemble) {
    const auto [u, v, w] = detail::powers_on_basis(h.entries(), k);
    re.noalias() += t2 * u * u.transpose();
    im.noalias() += (0.5 * t3) * (u * v.transpose() - v * u.transpose());
    odd_col += -t * u + (t3 / 6.0) * w;
    even_col += (-0.5 * t2) * v;
  }
  const RealVector ek = RealVector::Unit(n, k);
  re.noalias() += even_col * ek.transpose() + ek * even_col.transpose();
  im.noalias() += odd_col * ek.transpose() - ek * odd_col.transpose();
  const double inv = 1.0 / static_cast<double>(ensemble.size());

  ComplexMatrix rho(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i) {
      const Complex x(re(i, j) * inv, i == j ? 0.0 : im(i, j) * inv);
      rho(i, j) = x;
      rho(j, i) = std::conj(x);
    }
  rho(k, k) += 1.0;
  return DensityMatrix(std::move(rho), t);
}

/// B and D over indices 1..N-1 for the initial state |0>, built one member at a
/// time so only the first column of each H and H times it are kept.
class CrossoverMatrixBuilder {
 public:
  CrossoverMatrixBuilder(Eigen::Index n, Eigen::Index members, bool allow_size_override = false)
      : n_(n), members_(members) {
    if (n < 2) throw InvalidDimension("build_crossover_matrices: dimension must be >= 2");
    if (members < 1) throw ConfigError("build_crossover_matrices: empty ensemble");
    if (members != n && !allow_size_override)
      throw ConfigError("build_crossover_matrices: ensemble size " + std::to_string(members) +
                        " differs from dimension " + std::to_string(n));
    u_.resize(n - 1, members);
    v_.resize(n - 1, members);
  }

  Eigen::Index added() const { return next_; }

  void add(const RealSymmetricMatrix& h) {
    if (h.dim() != n_) throw ShapeError("build_crossover_matrices: member dimension mismatch");
    if (next_ >= members_) throw ConfigError("build_crossover_matrices: more members than declared");
    const RealMatrix& e = h.entries();
    const RealVector col = e.col(0);
    u_.col(next_) = col.tail(n_ - 1);
    v_.col(next_) = (e * col).tail(n_ - 1);
    diag_sq_ += e.diagonal().squaredNorm();
    ++next_;
  }

  CrossoverMatrices finish() const {
    if (next_ != members_)
      throw ConfigError("build_crossover_matrices: " + std::to_string(next_) + " of " + std::to_string(members_) +
                        " members added");
    const Eigen::Index m = n_ - 1;
    const double nd = static_cast<double>(n_);
    RealMatrix bb = std::sqrt(2.0 / nd) * (u_ * u_.transpose());
    RealMatrix dd = (std::sqrt(2.0) / nd) * (v_ * u_.transpose() - u_ * v_.transpose());
    for (Eigen::Index j = 0; j < m; ++j) {
      bb(j, j) -= std::sqrt(nd / 2.0);
      dd(j, j) = 0.0;
      for (Eigen::Index i = j + 1; i < m; ++i) {
        bb(j, i) = bb(i, j);
        dd(j, i) = -dd(i, j);
      }
    }
    std::optional<std::string> warning;
    const double diag_var = diag_sq_ / (nd * static_cast<double>(members_));
    if (std::abs(diag_var - 1.0) > 0.5)
      warning = "ensemble diagonal variance " + std::to_string(diag_var) + " is far from 1";
    return {RealSymmetricMatrix(std::move(bb)), RealAntisymmetricMatrix(std::move(dd)), std::move(warning)};
  }

 private:
  Eigen::Index n_, members_;
  Eigen::Index next_ = 0;
  RealMatrix u_, v_;
  double diag_sq_ = 0.0;
};

/// The member count must equal the dimension unless `allow_size_override` is set.
inline CrossoverMatrices build_crossover_matrices(std::span<const RealSymmetricMatrix> ensemble,
                                                  bool allow_size_override = false) {
  if (ensemble.empty()) throw ConfigError("build_crossover_matrices: empty ensemble");
  const Eigen::Index n = ensemble.front().dim();
  detail::require_ensemble(ensemble, n, "build_crossover_matrices");
  CrossoverMatrixBuilder b(n, static_cast<Eigen::Index>(ensemble.size()), allow_size_override);
  for (const auto& h : ensemble) b.add(h);
  return b.finish();
}

/// (t^2/sqrt(2n)) (B - i t sqrt(n)/2 D), (n-1)x(n-1).
inline ComplexMatrix sigma_bulk(const CrossoverMatrices& cm, double t, Eigen::Index n) {
  if (!(t >= 0.0)) throw DomainError("sigma_bulk: t must be >= 0");
  if (cm.b.dim() != n - 1 || cm.d.dim() != n - 1) throw ShapeError("sigma_bulk: matrices are not (n-1)x(n-1)");
  const double nd = static_cast<double>(n);
  const double pre = t * t / std::sqrt(2.0 * nd);
  ComplexMatrix out(n - 1, n - 1);
  out.real() = pre * cm.b.entries();
  out.imag() = (-pre * t * std::sqrt(nd) / 2.0) * cm.d.entries();
  return out;
}

/// Row and column 0 of the averaged series plus (t^2/2) on the remaining
/// diagonal. sigma_tilde + embedded sigma_bulk equals series_density.
inline ComplexMatrix sigma_tilde(std::span<const RealSymmetricMatrix> ensemble, double t) {
  if (!(t >= 0.0)) throw DomainError("sigma_tilde: t must be >= 0");
  if (ensemble.empty()) throw ConfigError("sigma_tilde: empty ensemble");
  const Eigen::Index n = ensemble.front().dim();
  detail::require_ensemble(ensemble, n, "sigma_tilde");
  const double t2 = t * t, t3 = t2 * t;
  ComplexVector col = ComplexVector::Zero(n);  // rho(n, 0)
  for (const auto& h : ensemble) {
    const auto [u, v, w] = detail::powers_on_basis(h.entries(), 0);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double s1 = r == 0 ? 0.0 : -u(r);
      const double s2 = u(r) * u(0) - 0.5 * (v(r) + (r == 0 ? v(0) : 0.0));
      const double s3 = 0.5 * (u(r) * v(0) - v(r) * u(0)) + (r == 0 ? 0.0 : w(r) / 6.0);
      col(r) += Complex(t2 * s2, t * s1 + t3 * s3);
    }
  }
  col /= static_cast<double>(ensemble.size());
  col(0) = Complex(1.0 + col(0).real(), 0.0);

  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  out.col(0) = col;
  out.row(0) = col.adjoint();
  for (Eigen::Index r = 1; r < n; ++r) out(r, r) = 0.5 * t2;
  return out;
}

inline ComplexMatrix embed_bulk(const ComplexMatrix& bulk) {
  const Eigen::Index n = bulk.rows() + 1;
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  out.bottomRightCorner(n - 1, n - 1) = bulk;
  return out;
}

inline double crossover_time(Eigen::Index n) {
  if (n < 2) throw InvalidDimension("crossover_time: dimension must be >= 2");
  return 2.0 / static_cast<double>(n);
}

/// Second moments of B and D pooled over many ensembles. Standard errors come
/// from the spread of per-ensemble estimates, so correlations between elements
/// of one ensemble are accounted for.
class CrossoverMomentAccumulator {
 public:
  struct Moment {
    double value = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    double z() const { return std_error > 0.0 ? (value - target) / std_error : 0.0; }
  };
  struct Report {
    std::size_t ensembles = 0;
    Eigen::Index dimension = 0;
    Moment b_mean, b_diag_var, b_offdiag_var, d_offdiag_var;
  };

  void add(const CrossoverMatrices& cm) {
    const RealMatrix& b = cm.b.entries();
    const RealMatrix& d = cm.d.entries();
    const Eigen::Index m = b.rows();
    if (dim_ == 0) dim_ = m + 1;
    if (m + 1 != dim_) throw ShapeError("CrossoverMomentAccumulator: dimension changed between ensembles");
    double bsum = 0.0, bdiag = 0.0, boff = 0.0, doff = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      bsum += b(j, j);
      bdiag += b(j, j) * b(j, j);
      for (Eigen::Index i = j + 1; i < m; ++i) {
        bsum += 2.0 * b(i, j);
        boff += b(i, j) * b(i, j);
        doff += d(i, j) * d(i, j);
      }
    }
    const double md = static_cast<double>(m);
    const double pairs = md * (md - 1.0) / 2.0;
    per_ensemble_[0].push_back(bsum / (md * md));
    per_ensemble_[1].push_back(bdiag / md);
    per_ensemble_[2].push_back(boff / pairs);
    per_ensemble_[3].push_back(doff / pairs);
  }

  void merge(const CrossoverMomentAccumulator& o) {
    if (o.dim_ == 0) return;
    if (dim_ == 0) dim_ = o.dim_;
    if (o.dim_ != dim_) throw ShapeError("CrossoverMomentAccumulator: dimension mismatch in merge");
    for (int q = 0; q < 4; ++q) per_ensemble_[q].insert(per_ensemble_[q].end(), o.per_ensemble_[q].begin(), o.per_ensemble_[q].end());
  }

  std::size_t ensembles() const { return per_ensemble_[0].size(); }

  Report report() const {
    const std::size_t e = per_ensemble_[0].size();
    if (e < 2) throw PreconditionError("CrossoverMomentAccumulator: need at least two ensembles");
    auto summarize = [&](const std::vector<double>& x, double target) {
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= static_cast<double>(e);
      double ss = 0.0;
      for (double v : x) ss += (v - mean) * (v - mean);
      return Moment{mean, std::sqrt(ss / static_cast<double>(e - 1) / static_cast<double>(e)), target};
    };
    return {e, dim_, summarize(per_ensemble_[0], 0.0), summarize(per_ensemble_[1], 1.0),
            summarize(per_ensemble_[2], 0.5), summarize(per_ensemble_[3], 0.5)};
  }

 private:
  Eigen::Index dim_ = 0;
  std::vector<double> per_ensemble_[4];
};

struct SeriesOrderReport {
  std::vector<double> times;
  std::vector<double> errors;  // Frobenius norm of series minus exact
  double slope = 0.0;          // least-squares slope of log(error) vs log(t)
};

/// Compares the third-order series with exact evolution on `times` (all > 0).
inline SeriesOrderReport series_order_check(std::span<const RealSymmetricMatrix> ensemble,
                                            const std::vector<double>& times) {
  if (ensemble.empty()) throw ConfigError("series_order_check: empty ensemble");
  if (times.size() < 2) throw ConfigError("series_order_check: need at least two times");
  const Eigen::Index n = ensemble.front().dim();
  detail::require_ensemble(ensemble, n, "series_order_check");
  const PureState psi0 = basis_state(n, 0);
  const DensityMatrix rho0(psi0.amplitudes() * psi0.amplitudes().adjoint(), 0.0);

  MixedStateBuilder builder(psi0, times, static_cast<Eigen::Index>(ensemble.size()), true);
  for (const auto& h : ensemble) {
    const auto d = decompose(h);
    builder.add(EigenbasisPropagator<double>(d, psi0));
  }
  const auto exact = builder.finish();

  SeriesOrderReport r;
  r.times = times;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0)) throw ConfigError("series_order_check: times must be positive");
    const double err = (series_density(ensemble, rho0, times[k]).entries() - exact[k].entries()).norm();
    r.errors.push_back(err);
    const double x = std::log(times[k]), y = std::log(err);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double c = static_cast<double>(times.size());
  r.slope = (c * sxy - sx * sy) / (c * sxx - sx * sx);
  return r;
}

}  // namespace rmtmix
