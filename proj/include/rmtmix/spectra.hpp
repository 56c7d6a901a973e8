#pragma once

// Eigenvalue statistics: truncation and bulk selection, spacing ratios, the
// GOE-GUE ratio crossover curve, Wigner surmise, polynomial unfolding, level
// number variance and the Marchenko-Pastur / quarter-circle densities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "rmtmix/error.hpp"
#include "rmtmix/matrices.hpp"

namespace rmtmix {

enum class SymmetryClass { goe, gue };

inline const char* to_string(SymmetryClass c) { return c == SymmetryClass::goe ? "GOE" : "GUE"; }

/// Reference plateau values of <r~> used throughout.
inline constexpr double kRTildeGoe = 0.5307;
inline constexpr double kRTildeGue = 0.5996;
inline constexpr double kRTildePoisson = 0.38629436111989061;  // 2 ln 2 - 1

struct SpectrumSample {
  RealVector eigenvalues;  // ascending
  double time = 0.0;
  std::string source;
  std::int64_t realization = 0;
};

struct TruncationResult {
  RealVector values;  // kept eigenvalues, ascending
  double captured = 0.0;
  bool complete = true;  // false: all values kept without reaching 1 - tolerance
};

/// Keeps the largest eigenvalues until their sum reaches 1 - tolerance.
inline TruncationResult truncate_spectrum(const RealVector& eigs, double tolerance = 1e-12) {
  if (!(tolerance >= 0.0)) throw ConfigError("truncate_spectrum: tolerance must be >= 0");
  std::vector<double> v(eigs.data(), eigs.data() + eigs.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  double sum = 0.0, c = 0.0;
  std::size_t kept = 0;
  for (; kept < v.size(); ) {
    // Kahan summation keeps the 1e-12 threshold meaningful.
    const double y = v[kept] - c;
    const double s = sum + y;
    c = (s - sum) - y;
    sum = s;
    ++kept;
    if (sum >= 1.0 - tolerance) break;
  }
  TruncationResult r;
  r.captured = sum;
  r.complete = sum >= 1.0 - tolerance;
  r.values.resize(static_cast<Eigen::Index>(kept));
  for (std::size_t i = 0; i < kept; ++i) r.values(static_cast<Eigen::Index>(i)) = v[kept - 1 - i];
  return r;
}

/// Central ceil(fraction * n) values; the odd leftover is trimmed from the low end.
inline RealVector central_bulk(const RealVector& eigs, double fraction = 0.6) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("central_bulk: fraction must lie in (0, 1]");
  const Eigen::Index n = eigs.size();
  const auto keep = std::min<Eigen::Index>(
      n, static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  const Eigen::Index trim = n - keep;
  const Eigen::Index low = (trim + 1) / 2;
  return eigs.segment(low, keep);
}

struct RTildeSummary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
  std::size_t skipped = 0;  // ratios dropped for a degenerate spacing
};

namespace detail {

inline bool degenerate_spacing(double a, double b) {
  return !(b - a > std::numeric_limits<double>::epsilon() * (std::abs(a) + std::abs(b)));
}

}  // namespace detail

/// Calls f(r~_i) for every interior index with both spacings nondegenerate;
/// returns the number of skipped ratios.
template <typename F>
std::size_t for_each_r_tilde(const RealVector& eigs, F&& f) {
  std::size_t skipped = 0;
  for (Eigen::Index i = 1; i + 1 < eigs.size(); ++i) {
    if (detail::degenerate_spacing(eigs(i - 1), eigs(i)) || detail::degenerate_spacing(eigs(i), eigs(i + 1))) {
      ++skipped;
      continue;
    }
    const double d0 = eigs(i) - eigs(i - 1);
    const double d1 = eigs(i + 1) - eigs(i);
    f(d1 < d0 ? d1 / d0 : d0 / d1);
  }
  return skipped;
}

inline RTildeSummary r_tilde_mean(const RealVector& eigs) {
  if (eigs.size() < 3) throw PreconditionError("r_tilde_mean: need at least 3 eigenvalues");
  double s = 0.0, ss = 0.0;
  std::size_t n = 0;
  RTildeSummary r;
  r.skipped = for_each_r_tilde(eigs, [&](double x) {
    s += x;
    ss += x * x;
    ++n;
  });
  r.count = n;
  if (n > 0) r.mean = s / static_cast<double>(n);
  if (n > 1) {
    const double var = std::max(0.0, (ss - s * s / static_cast<double>(n)) / static_cast<double>(n - 1));
    r.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return r;
}

namespace detail {

inline double r_tilde_crossover_unchecked(double tau) {
  using std::numbers::pi;
  const double s3 = std::numbers::sqrt3;
  const double t2 = tau * tau;
  const double q = 1.0 - t2;
  const double q32 = q * std::sqrt(q);
  return 4.0 * (2.0 + t2) / (pi * q) * std::atan2(s3 * (1.0 + t2), 2.0 * tau) -
         4.0 * s3 / (pi * q32) * std::atan2(q32, tau * (3.0 + t2)) -
         (17.0 + 7.0 * t2) / (pi * q) * std::atan(tau / s3) - std::atan(s3 * tau) / pi;
}

}  // namespace detail

/// <r~> along the GOE-GUE crossover, tau in [0, 1]. The closed form cancels
/// catastrophically as tau -> 1, where the curve approaches its limit
/// 2 sqrt(3)/pi - 1/2 as (1 - tau)^3; the last 1e-3 uses that cubic.
inline double r_tilde_crossover(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("r_tilde_crossover: tau must lie in [0, 1]");
  constexpr double kJoin = 1e-3;
  const double d = 1.0 - tau;
  if (d >= kJoin) return detail::r_tilde_crossover_unchecked(tau);
  const double limit = 2.0 * std::numbers::sqrt3 / std::numbers::pi - 0.5;
  const double r = d / kJoin;
  return limit + (detail::r_tilde_crossover_unchecked(1.0 - kJoin) - limit) * r * r * r;
}

/// Same curve with tau clamped into [0, 1]; used as a fit model.
inline double r_tilde_crossover_clamped(double tau) {
  if (std::isnan(tau)) return tau;
  return r_tilde_crossover(std::clamp(tau, 0.0, 1.0));
}

inline double wigner_surmise(double s, SymmetryClass c) {
  using std::numbers::pi;
  if (!(s >= 0.0)) throw DomainError("wigner_surmise: s must be >= 0");
  if (c == SymmetryClass::goe) return 0.5 * pi * s * std::exp(-0.25 * pi * s * s);
  return 32.0 / (pi * pi) * s * s * std::exp(-4.0 * s * s / pi);
}

inline double wigner_surmise_cdf(double s, SymmetryClass c) {
  using std::numbers::pi;
  if (!(s >= 0.0)) throw DomainError("wigner_surmise_cdf: s must be >= 0");
  if (c == SymmetryClass::goe) return -std::expm1(-0.25 * pi * s * s);
  return std::erf(2.0 * s / std::sqrt(pi)) - 4.0 * s / pi * std::exp(-4.0 * s * s / pi);
}

struct UnfoldedSpectrum {
  RealVector levels;  // ascending
  int degree = 0;
  double residual = 0.0;  // RMS deviation of the fit from the staircase
  std::size_t reordered = 0;  // levels that were out of order after mapping
  bool log_coordinate = false;
  double mean_spacing() const {
    return levels.size() < 2 ? 0.0 : (levels(levels.size() - 1) - levels(0)) / static_cast<double>(levels.size() - 1);
  }
};

/// Least-squares polynomial fit of the staircase (lambda_i, i + 1/2), i from 0,
/// in a Legendre basis over the spectrum's range mapped to [-1, 1].
inline UnfoldedSpectrum unfold(const RealVector& eigs, int degree = 7) {
  if (degree < 1) throw ConfigError("unfold: degree must be >= 1");
  const Eigen::Index n = eigs.size();
  if (n < degree + 2)
    throw PreconditionError("unfold: need at least degree + 2 = " + std::to_string(degree + 2) + " eigenvalues");
  const double lo = eigs(0), hi = eigs(n - 1);
  if (!(hi > lo)) throw UnfoldingError("unfold: spectrum has zero width; rescale or remove degeneracies");
  const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);

  auto basis_row = [&](double x, Eigen::Ref<RealVector> row) {
    const double y = (x - mid) / half;
    row(0) = 1.0;
    if (degree >= 1) row(1) = y;
    for (int k = 2; k <= degree; ++k) row(k) = ((2.0 * k - 1.0) * y * row(k - 1) - (k - 1.0) * row(k - 2)) / k;
  };
  RealMatrix a(n, degree + 1);
  RealVector b(n);
  RealVector row(degree + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis_row(eigs(i), row);
    a.row(i) = row.transpose();
    b(i) = static_cast<double>(i) + 0.5;
  }
  const Eigen::ColPivHouseholderQR<RealMatrix> qr(a);
  const auto rdiag = qr.matrixQR().diagonal().cwiseAbs();
  const double cond = rdiag.maxCoeff() / rdiag.minCoeff();
  if (!(cond < 1e12))
    throw UnfoldingError("unfold: ill-conditioned polynomial fit (condition estimate " + std::to_string(cond) +
                         "); rescale the spectrum or lower the degree");
  const RealVector coef = qr.solve(b);

  UnfoldedSpectrum u;
  u.degree = degree;
  u.levels = a * coef;
  u.residual = std::sqrt((u.levels - b).squaredNorm() / static_cast<double>(n));
  for (Eigen::Index i = 1; i < n; ++i)
    if (u.levels(i) < u.levels(i - 1)) ++u.reordered;
  if (u.reordered > 0) std::sort(u.levels.data(), u.levels.data() + n);
  return u;
}

/// Order kept and staircase residual within Poisson-scale fluctuations.
inline bool unfolding_adequate(const UnfoldedSpectrum& u) {
  const double n = static_cast<double>(u.levels.size());
  return u.reordered == 0 && u.residual <= std::max(3.0, 0.5 * std::sqrt(n));
}

/// unfold() in lambda; positive spectra whose fit there fails or is not adequate
/// are refitted in log(lambda). Throws UnfoldingError when neither fit is usable.
inline UnfoldedSpectrum unfold_adaptive(const RealVector& eigs, int degree = 7) {
  std::string why;
  try {
    UnfoldedSpectrum u = unfold(eigs, degree);
    if (unfolding_adequate(u)) return u;
    why = "residual " + std::to_string(u.residual) + ", " + std::to_string(u.reordered) + " levels out of order";
  } catch (const UnfoldingError& e) {
    why = e.what();
  }
  if (eigs.size() == 0 || !(eigs.minCoeff() > 0.0)) throw UnfoldingError("unfold: no usable fit in lambda (" + why + ")");
  UnfoldedSpectrum u = unfold(RealVector(eigs.array().log()), degree);
  if (!unfolding_adequate(u))
    throw UnfoldingError("unfold: no usable fit in lambda (" + why + ") or log(lambda) (residual " +
                         std::to_string(u.residual) + ", " + std::to_string(u.reordered) + " levels out of order)");
  u.log_coordinate = true;
  return u;
}

/// Spacings divided by their mean.
inline std::vector<double> normalized_spacings(const RealVector& eigs) {
  std::vector<double> s;
  if (eigs.size() < 2) return s;
  s.reserve(static_cast<std::size_t>(eigs.size() - 1));
  for (Eigen::Index i = 1; i < eigs.size(); ++i) s.push_back(eigs(i) - eigs(i - 1));
  const double mean = (eigs(eigs.size() - 1) - eigs(0)) / static_cast<double>(eigs.size() - 1);
  if (mean > 0.0)
    for (double& x : s) x /= mean;
  return s;
}

inline double number_variance_goe(double l) {
  using std::numbers::pi;
  return 2.0 / (pi * pi) * (std::log(2.0 * pi * l) + std::numbers::egamma + 1.0 - pi * pi / 8.0);
}

inline double number_variance_gue(double l) {
  using std::numbers::pi;
  return 1.0 / (pi * pi) * (std::log(2.0 * pi * l) + std::numbers::egamma + 1.0);
}

inline double number_variance_theory(double l, SymmetryClass c) {
  if (!(l > 0.0)) throw DomainError("number variance: length must be > 0");
  return c == SymmetryClass::goe ? number_variance_goe(l) : number_variance_gue(l);
}

/// Counts of levels in [start, start + l) for starts on the grid j * l/4 that
/// fit inside [levels.front(), levels.back()]. Calls f(j, count).
template <typename F>
void for_each_window(const RealVector& levels, double l, F&& f) {
  if (levels.size() < 2) return;
  const double first = levels(0), last = levels(levels.size() - 1);
  const double step = 0.25 * l;
  const auto j0 = static_cast<std::int64_t>(std::ceil(first / step));
  const double* begin = levels.data();
  const double* end = begin + levels.size();
  for (std::int64_t j = j0;; ++j) {
    const double a = static_cast<double>(j) * step;
    const double b = a + l;
    if (b > last) break;
    const auto count = std::lower_bound(begin, end, b) - std::lower_bound(begin, end, a);
    f(j, static_cast<double>(count));
  }
}

struct NumberVarianceRow {
  double length;
  double value;
};

struct NumberVarianceTable {
  std::vector<NumberVarianceRow> rows;
  std::vector<double> excluded;  // lengths above a quarter of the span
};

/// Single-spectrum estimate: variance of window counts over window positions.
inline NumberVarianceTable number_variance(const UnfoldedSpectrum& u, const std::vector<double>& lengths) {
  NumberVarianceTable t;
  const double span = u.levels.size() < 2 ? 0.0 : u.levels(u.levels.size() - 1) - u.levels(0);
  for (double l : lengths) {
    if (!(l > 0.0)) throw ConfigError("number_variance: lengths must be > 0");
    if (l > 0.25 * span) {
      t.excluded.push_back(l);
      continue;
    }
    double s = 0.0, ss = 0.0, c = 0.0;
    for_each_window(u.levels, l, [&](std::int64_t, double n) {
      s += n;
      ss += n * n;
      c += 1.0;
    });
    const double mean = s / c;
    t.rows.push_back({l, std::max(0.0, ss / c - mean * mean)});
  }
  return t;
}

/// P(lambda) = sqrt(4/lambda - 1) / (2 pi) on (0, 4]; +inf at 0, 0 outside.
inline double marchenko_pastur_pdf(double x) {
  if (x == 0.0) return std::numeric_limits<double>::infinity();
  if (!(x > 0.0 && x <= 4.0)) return 0.0;
  return std::sqrt(4.0 / x - 1.0) / (2.0 * std::numbers::pi);
}

inline double marchenko_pastur_cdf(double x) {
  if (!(x > 0.0)) return 0.0;
  if (x >= 4.0) return 1.0;
  const double th = std::asin(0.5 * std::sqrt(x));
  return 2.0 / std::numbers::pi * (th + std::sin(th) * std::cos(th));
}

/// P(y) = sqrt(4 - y^2) / pi on [0, 2].
inline double quarter_circle_pdf(double y) {
  if (!(y >= 0.0 && y <= 2.0)) return 0.0;
  return std::sqrt(4.0 - y * y) / std::numbers::pi;
}

inline double quarter_circle_cdf(double y) {
  if (!(y > 0.0)) return 0.0;
  if (y >= 2.0) return 1.0;
  return (0.5 * y * std::sqrt(4.0 - y * y) + 2.0 * std::asin(0.5 * y)) / std::numbers::pi;
}

/// lambda * n.
inline RealVector rescale_eigenvalues(const RealVector& eigs, Eigen::Index n) {
  return eigs * static_cast<double>(n);
}

/// Drops the largest value and divides the rest by their standard deviation.
inline RealVector bulk_std_rescale(const RealVector& eigs) {
  if (eigs.size() < 3) throw PreconditionError("bulk_std_rescale: need at least 3 eigenvalues");
  RealVector v = eigs;
  std::sort(v.data(), v.data() + v.size());
  RealVector rest = v.head(v.size() - 1);
  const double mean = rest.mean();
  const double sd = std::sqrt((rest.array() - mean).square().sum() / static_cast<double>(rest.size()));
  if (!(sd > 0.0)) throw DomainError("bulk_std_rescale: zero spread");
  return rest / sd;
}

enum class DensityScaling { system_size, bulk_std };

inline const char* to_string(DensityScaling s) { return s == DensityScaling::system_size ? "system-size" : "bulk-std"; }

inline RealVector rescale_for_density(const RealVector& eigs, Eigen::Index n, DensityScaling mode) {
  return mode == DensityScaling::system_size ? rescale_eigenvalues(eigs, n) : bulk_std_rescale(eigs);
}

}  // namespace rmtmix
