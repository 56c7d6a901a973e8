#pragma once

// Weighted nonlinear least squares of <r~> curves against the crossover model.
// Levenberg-Marquardt with central finite-difference Jacobians.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "rmtmix/spectra.hpp"

namespace rmtmix {

enum class FitForm {
  scale_shift,            // r~(a x) + b
  scale_shift_amplitude,  // r~(a x) c + b
  scale_inner_shift,      // r~(a x + b)
};

enum class FitAbscissa { nt, t };

struct CrossoverFitModel {
  FitForm form = FitForm::scale_shift;
  FitAbscissa abscissa = FitAbscissa::nt;

  int parameter_count() const { return form == FitForm::scale_shift_amplitude ? 3 : 2; }

  double operator()(double x, const RealVector& p) const {
    switch (form) {
      case FitForm::scale_shift:
        return r_tilde_crossover_clamped(p(0) * x) + p(1);
      case FitForm::scale_shift_amplitude:
        return r_tilde_crossover_clamped(p(0) * x) * p(2) + p(1);
      case FitForm::scale_inner_shift:
        return r_tilde_crossover_clamped(p(0) * x + p(1));
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

inline const char* to_string(FitForm f) {
  switch (f) {
    case FitForm::scale_shift: return "scale-shift";
    case FitForm::scale_shift_amplitude: return "scale-shift-amplitude";
    case FitForm::scale_inner_shift: return "scale-inner-shift";
  }
  return "?";
}

inline const char* to_string(FitAbscissa a) { return a == FitAbscissa::nt ? "Nt" : "t"; }

struct FitPoint {
  double x;
  double y;
  double weight = 1.0;
};

struct FitOptions {
  int max_iterations = 200;
  /// Convergence threshold on |J^T r| / (|J| |r|).
  double gradient_tolerance = 1e-6;
  double step_tolerance = 1e-12;
};

struct FitResult {
  RealVector parameters;
  RealVector std_errors;
  double rss = 0.0;  // weighted residual sum of squares
  double x_min = 0.0;
  double x_max = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::size_t points = 0;
};

namespace detail {

inline RealVector fit_residuals(const std::vector<FitPoint>& d, const CrossoverFitModel& m, const RealVector& p) {
  RealVector r(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i)
    r(static_cast<Eigen::Index>(i)) = std::sqrt(d[i].weight) * (m(d[i].x, p) - d[i].y);
  return r;
}

inline RealMatrix fit_jacobian(const std::vector<FitPoint>& d, const CrossoverFitModel& m, const RealVector& p,
                               double step_scale = 1.0) {
  RealMatrix j(static_cast<Eigen::Index>(d.size()), p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = step_scale * std::max(1e-6, 1e-6 * std::abs(p(k)));
    RealVector up = p, dn = p;
    up(k) += h;
    dn(k) -= h;
    j.col(k) = (fit_residuals(d, m, up) - fit_residuals(d, m, dn)) / (2.0 * h);
  }
  return j;
}

inline double relative_gradient(const RealMatrix& j, const RealVector& r) {
  const double g = (j.transpose() * r).norm();
  const double scale = j.norm() * r.norm();
  return scale > 0.0 ? g / scale : 0.0;
}

}  // namespace detail

/// Public for Jacobian checks.
inline RealMatrix fit_jacobian(const std::vector<FitPoint>& data, const CrossoverFitModel& model, const RealVector& p,
                               double step_scale = 1.0) {
  return detail::fit_jacobian(data, model, p, step_scale);
}

inline FitResult fit_crossover(const std::vector<FitPoint>& data, const CrossoverFitModel& model, RealVector init,
                               const FitOptions& options = {}) {
  const int np = model.parameter_count();
  if (init.size() != np)
    throw ConfigError("fit_crossover: expected " + std::to_string(np) + " initial parameters, got " +
                      std::to_string(init.size()));
  if (static_cast<int>(data.size()) < np + 2)
    throw PreconditionError("fit_crossover: need at least " + std::to_string(np + 2) + " data points");
  for (const auto& pt : data) {
    if (!(pt.x >= 0.0) || !std::isfinite(pt.y) || !(pt.weight > 0.0) || !std::isfinite(pt.weight))
      throw DomainError("fit_crossover: data need x >= 0, finite y and positive finite weights");
  }

  FitResult res;
  res.points = data.size();
  res.x_min = std::min_element(data.begin(), data.end(), [](auto& a, auto& b) { return a.x < b.x; })->x;
  res.x_max = std::max_element(data.begin(), data.end(), [](auto& a, auto& b) { return a.x < b.x; })->x;

  RealVector p = std::move(init);
  RealVector r = detail::fit_residuals(data, model, p);
  double rss = r.squaredNorm();
  double lambda = 1e-3;
  RealMatrix j = detail::fit_jacobian(data, model, p);
  double grad = detail::relative_gradient(j, r);
  int it = 0;
  while (it < options.max_iterations && grad > options.gradient_tolerance && rss > 0.0) {
    ++it;
    const RealMatrix jtj = j.transpose() * j;
    const RealVector g = j.transpose() * r;
    bool accepted = false;
    double step_norm = 0.0;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      RealMatrix a = jtj;
      for (Eigen::Index k = 0; k < np; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const RealVector delta = a.ldlt().solve(-g);
      const RealVector trial = p + delta;
      const RealVector rt = detail::fit_residuals(data, model, trial);
      const double rss_t = rt.squaredNorm();
      if (std::isfinite(rss_t) && rss_t <= rss) {
        step_norm = delta.norm() / (p.norm() + 1e-300);
        p = trial;
        r = rt;
        rss = rss_t;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    j = detail::fit_jacobian(data, model, p);
    grad = detail::relative_gradient(j, r);
    if (!accepted || step_norm < options.step_tolerance) break;
  }

  res.parameters = p;
  res.rss = rss;
  res.iterations = it;
  res.gradient_norm = grad;
  res.converged = grad <= options.gradient_tolerance || rss == 0.0;

  const RealMatrix jtj = j.transpose() * j;
  Eigen::FullPivLU<RealMatrix> lu(jtj);
  lu.setThreshold(1e-12);
  if (lu.rank() < np) throw RankDeficiencyError("fit_crossover: singular normal matrix; parameters not identifiable");
  const double dof = static_cast<double>(data.size()) - np;
  const RealMatrix cov = lu.inverse() * (rss / dof);
  res.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return res;
}

/// (0, 1/a).
inline std::pair<double, double> fit_range_from_scale(double a, FitAbscissa = FitAbscissa::nt) {
  if (!(a > 0.0)) throw DomainError("fit_range_from_scale: scale must be > 0");
  return {0.0, 1.0 / a};
}

/// a0 with a0 * x_mid = 1/2, x_mid the first midpoint crossing of y (log-linear
/// interpolation); b0 = 0, c0 = 1.
inline RealVector default_fit_init(const std::vector<FitPoint>& data, const CrossoverFitModel& model) {
  const double mid = 0.5 * (kRTildeGoe + kRTildeGue);
  std::vector<FitPoint> d = data;
  std::sort(d.begin(), d.end(), [](auto& a, auto& b) { return a.x < b.x; });
  double x_mid = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 1; i < d.size(); ++i) {
    if ((d[i - 1].y - mid) * (d[i].y - mid) <= 0.0 && d[i].y != d[i - 1].y) {
      const double f = (mid - d[i - 1].y) / (d[i].y - d[i - 1].y);
      x_mid = d[i - 1].x > 0.0 ? std::exp(std::log(d[i - 1].x) + f * (std::log(d[i].x) - std::log(d[i - 1].x)))
                               : d[i - 1].x + f * (d[i].x - d[i - 1].x);
      break;
    }
  }
  if (!(x_mid > 0.0)) x_mid = d.empty() ? 1.0 : std::max(d[d.size() / 2].x, 1e-12);
  RealVector p(model.parameter_count());
  p(0) = 0.5 / x_mid;
  p(1) = 0.0;
  if (model.form == FitForm::scale_shift_amplitude) p(2) = 1.0;
  return p;
}

/// Fit, restrict to 0 <= x <= 1/a, refit; stops when the subset is stable or
/// after `max_passes` fits.
inline FitResult fit_crossover_iterative(const std::vector<FitPoint>& data, const CrossoverFitModel& model,
                                         std::optional<RealVector> init = std::nullopt, int max_passes = 5,
                                         const FitOptions& options = {}) {
  RealVector p = init ? *init : default_fit_init(data, model);
  FitResult res = fit_crossover(data, model, p, options);
  std::size_t previous = data.size();
  for (int pass = 1; pass < max_passes; ++pass) {
    if (!(res.parameters(0) > 0.0)) break;
    const double hi = fit_range_from_scale(res.parameters(0)).second;
    std::vector<FitPoint> subset;
    for (const auto& pt : data)
      if (pt.x <= hi) subset.push_back(pt);
    if (subset.size() == previous || static_cast<int>(subset.size()) < model.parameter_count() + 2) break;
    previous = subset.size();
    res = fit_crossover(subset, model, res.parameters, options);
  }
  return res;
}

}  // namespace rmtmix
