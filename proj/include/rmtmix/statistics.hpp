#pragma once

// Mergeable accumulators for pooled spectral statistics and the per-spectrum
// analysis pipeline (truncate, bulk, ratios, unfold, spacings, number variance,
// density histograms).

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "rmtmix/spectra.hpp"

namespace rmtmix {

/// Fixed-edge histogram of raw counts.
class Histogram {
 public:
  Histogram() = default;
  Histogram(double lo, double hi, int bins) : lo_(lo), hi_(hi), counts_(static_cast<std::size_t>(bins), 0.0) {
    if (bins < 1 || !(hi > lo)) throw ConfigError("Histogram: need bins >= 1 and hi > lo");
  }

  void add(double x, double weight = 1.0) {
    if (x < lo_) {
      underflow_ += weight;
    } else if (x >= hi_) {
      overflow_ += weight;
    } else {
      auto k = static_cast<std::size_t>((x - lo_) / width());
      counts_[std::min(k, counts_.size() - 1)] += weight;
    }
  }

  void merge(const Histogram& o) {
    if (o.empty_layout()) return;
    if (empty_layout()) {
      *this = o;
      return;
    }
    if (o.lo_ != lo_ || o.hi_ != hi_ || o.counts_.size() != counts_.size())
      throw ShapeError("Histogram: cannot merge histograms with different edges");
    for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += o.counts_[k];
    underflow_ += o.underflow_;
    overflow_ += o.overflow_;
  }

  int bins() const { return static_cast<int>(counts_.size()); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double width() const { return (hi_ - lo_) / static_cast<double>(counts_.size()); }
  double edge(int k) const { return lo_ + width() * k; }
  double center(int k) const { return lo_ + width() * (k + 0.5); }
  const std::vector<double>& counts() const { return counts_; }
  double underflow() const { return underflow_; }
  double overflow() const { return overflow_; }
  double in_range() const {
    double s = 0.0;
    for (double c : counts_) s += c;
    return s;
  }
  bool empty_layout() const { return counts_.empty(); }

  /// Density normalized over in-range counts; integrates to 1.
  std::vector<double> densities() const {
    const double total = in_range();
    std::vector<double> d(counts_.size(), 0.0);
    if (total > 0.0)
      for (std::size_t k = 0; k < counts_.size(); ++k) d[k] = counts_[k] / (total * width());
    return d;
  }

  void set_raw(std::vector<double> counts, double underflow, double overflow) {
    if (counts.size() != counts_.size()) throw ShapeError("Histogram: raw count length mismatch");
    counts_ = std::move(counts);
    underflow_ = underflow;
    overflow_ = overflow;
  }

 private:
  double lo_ = 0.0, hi_ = 1.0;
  std::vector<double> counts_;
  double underflow_ = 0.0, overflow_ = 0.0;
};

/// Density histogram of s over pooled normalized spacings of `eigs`.
inline Histogram spacing_histogram(const RealVector& eigs, int bins, double s_max = 4.0) {
  if (eigs.size() < 2) throw PreconditionError("spacing_histogram: need at least 2 eigenvalues");
  Histogram h(0.0, s_max, bins);
  for (double s : normalized_spacings(eigs)) h.add(s);
  return h;
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  int merged_bins = 0;  // bins after pooling low-expectation neighbours
};

/// Pearson chi-square of in-range counts against a distribution given by its
/// CDF, conditioned on the in-range total. Adjacent bins are pooled until each
/// expected count is at least `min_expected`.
inline ChiSquareResult chi_square_test(const Histogram& h, const std::function<double(double)>& cdf,
                                       double min_expected = 5.0) {
  const double total = h.in_range();
  if (!(total > 0.0)) throw PreconditionError("chi_square_test: empty histogram");
  const double mass = cdf(h.hi()) - cdf(h.lo());
  if (!(mass > 0.0)) throw DomainError("chi_square_test: distribution has no mass in the histogram range");
  std::vector<double> obs, exp;
  double o = 0.0, e = 0.0;
  for (int k = 0; k < h.bins(); ++k) {
    o += h.counts()[static_cast<std::size_t>(k)];
    e += total * (cdf(h.edge(k + 1)) - cdf(h.edge(k))) / mass;
    if (e >= min_expected) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (exp.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }
  ChiSquareResult r;
  r.merged_bins = static_cast<int>(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (exp[k] > 0.0) r.statistic += (obs[k] - exp[k]) * (obs[k] - exp[k]) / exp[k];
    else if (obs[k] > 0.0) r.statistic = std::numeric_limits<double>::infinity();
  }
  r.dof = r.merged_bins - 1;
  if (r.dof < 1) throw PreconditionError("chi_square_test: fewer than two usable bins");
  r.p_value = std::isfinite(r.statistic) ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic) : 0.0;
  return r;
}

/// Pooled <r~> with a batch-means standard error over realizations.
class RTildeAccumulator {
 public:
  void add_realization(const RealVector& eigs) {
    double s = 0.0;
    std::size_t n = 0;
    skipped_ += for_each_r_tilde(eigs, [&](double x) {
      s += x;
      ++n;
    });
    if (n == 0) return;
    sum_ += s;
    count_ += static_cast<double>(n);
    const double m = s / static_cast<double>(n);
    batch_sum_ += m;
    batch_sumsq_ += m * m;
    batches_ += 1.0;
  }

  void merge(const RTildeAccumulator& o) {
    sum_ += o.sum_;
    count_ += o.count_;
    batch_sum_ += o.batch_sum_;
    batch_sumsq_ += o.batch_sumsq_;
    batches_ += o.batches_;
    skipped_ += o.skipped_;
  }

  double mean() const { return count_ > 0.0 ? sum_ / count_ : std::numeric_limits<double>::quiet_NaN(); }
  double std_error() const {
    if (batches_ < 2.0) return std::numeric_limits<double>::quiet_NaN();
    const double m = batch_sum_ / batches_;
    const double var = std::max(0.0, (batch_sumsq_ - batches_ * m * m) / (batches_ - 1.0));
    return std::sqrt(var / batches_);
  }
  double count() const { return count_; }
  double realizations() const { return batches_; }
  std::size_t skipped() const { return skipped_; }

  struct Raw {
    double sum, count, batch_sum, batch_sumsq, batches;
    std::size_t skipped;
  };
  Raw raw() const { return {sum_, count_, batch_sum_, batch_sumsq_, batches_, skipped_}; }
  static RTildeAccumulator from_raw(const Raw& r) {
    RTildeAccumulator a;
    a.sum_ = r.sum, a.count_ = r.count, a.batch_sum_ = r.batch_sum, a.batch_sumsq_ = r.batch_sumsq;
    a.batches_ = r.batches, a.skipped_ = r.skipped;
    return a;
  }

 private:
  double sum_ = 0.0, count_ = 0.0, batch_sum_ = 0.0, batch_sumsq_ = 0.0, batches_ = 0.0;
  std::size_t skipped_ = 0;
};

/// Sigma^2(l) pooled over realizations: the count variance is taken across
/// realizations at each window position first, then averaged over positions.
class NumberVarianceAccumulator {
 public:
  NumberVarianceAccumulator() = default;
  explicit NumberVarianceAccumulator(std::vector<double> lengths) : lengths_(std::move(lengths)) {
    for (double l : lengths_)
      if (!(l > 0.0)) throw ConfigError("NumberVarianceAccumulator: lengths must be > 0");
    cells_.resize(lengths_.size());
    excluded_.assign(lengths_.size(), 0.0);
  }

  void add_realization(const UnfoldedSpectrum& u) {
    const RealVector& x = u.levels;
    const double span = x.size() < 2 ? 0.0 : x(x.size() - 1) - x(0);
    for (std::size_t k = 0; k < lengths_.size(); ++k) {
      const double l = lengths_[k];
      if (l > 0.25 * span) {
        excluded_[k] += 1.0;
        continue;
      }
      for_each_window(x, l, [&](std::int64_t j, double n) {
        Cell& c = cells_[k][j];
        c.n += 1.0;
        c.s += n;
        c.ss += n * n;
      });
    }
  }

  void merge(const NumberVarianceAccumulator& o) {
    if (o.lengths_.empty()) return;
    if (lengths_.empty()) {
      *this = o;
      return;
    }
    if (o.lengths_ != lengths_) throw ShapeError("NumberVarianceAccumulator: length lists differ");
    for (std::size_t k = 0; k < lengths_.size(); ++k) {
      excluded_[k] += o.excluded_[k];
      for (const auto& [j, c] : o.cells_[k]) {
        Cell& d = cells_[k][j];
        d.n += c.n;
        d.s += c.s;
        d.ss += c.ss;
      }
    }
  }

  const std::vector<double>& lengths() const { return lengths_; }
  /// Realizations for which length k was too large.
  double excluded(std::size_t k) const { return excluded_.at(k); }

  /// NaN where fewer than two realizations covered any position.
  std::vector<double> values() const {
    std::vector<double> out;
    for (std::size_t k = 0; k < lengths_.size(); ++k) {
      double acc = 0.0, w = 0.0;
      for (const auto& [j, c] : cells_[k]) {
        if (c.n < 2.0) continue;
        const double m = c.s / c.n;
        const double var = std::max(0.0, (c.ss - c.n * m * m) / (c.n - 1.0));
        acc += c.n * var;
        w += c.n;
      }
      out.push_back(w > 0.0 ? acc / w : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
  }

  struct Cell {
    double n = 0.0, s = 0.0, ss = 0.0;
  };
  const std::map<std::int64_t, Cell>& cells(std::size_t k) const { return cells_.at(k); }
  void set_cells(std::size_t k, std::map<std::int64_t, Cell> c, double excluded) {
    cells_.at(k) = std::move(c);
    excluded_.at(k) = excluded;
  }

 private:
  std::vector<double> lengths_;
  std::vector<std::map<std::int64_t, Cell>> cells_;
  std::vector<double> excluded_;
};

struct SpectrumDiagnostics {
  double purity = 1.0;
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
};

struct AnalysisOptions {
  double truncation_tolerance = 1e-12;
  double bulk_fraction = 0.6;
  int unfolding_degree = 7;
  int spacing_bins = 40;
  double spacing_max = 4.0;
  std::vector<double> number_variance_lengths{1.0, 2.0, 5.0, 10.0};
  DensityScaling density_scaling = DensityScaling::bulk_std;
  int density_bins = 40;
  double density_lo = 0.05;
  double density_hi = 4.0;
  /// Raw Hamiltonian spectra: no truncation and no density histogram.
  bool hamiltonian_spectrum = false;
};

/// Everything pooled at one time of the grid.
class SpectralStatistics {
 public:
  SpectralStatistics() = default;
  explicit SpectralStatistics(const AnalysisOptions& o)
      : spacing_(0.0, o.spacing_max, o.spacing_bins),
        number_variance_(o.number_variance_lengths),
        density_(o.density_lo, o.density_hi, o.density_bins),
        density_sqrt_(std::sqrt(o.density_lo), std::sqrt(o.density_hi), o.density_bins) {}

  /// Runs the full pipeline on one spectrum (any order).
  void add_spectrum(const RealVector& eigs, Eigen::Index dimension, const AnalysisOptions& o,
                    const SpectrumDiagnostics& diag = {}) {
    RealVector sorted = eigs;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    realizations_ += 1.0;
    purity_sum_ += diag.purity;
    purity_sumsq_ += diag.purity * diag.purity;
    max_trace_error_ = std::max(max_trace_error_, diag.trace_error);
    max_hermiticity_error_ = std::max(max_hermiticity_error_, diag.hermiticity_error);
    if (sorted.size() > 0) min_eigenvalue_ = std::min(min_eigenvalue_, sorted(0));

    RealVector kept = sorted;
    if (!o.hamiltonian_spectrum) {
      TruncationResult tr = truncate_spectrum(sorted, o.truncation_tolerance);
      if (!tr.complete) incomplete_truncations_ += 1.0;
      kept = std::move(tr.values);
    }
    kept_sum_ += static_cast<double>(kept.size());

    const RealVector bulk = central_bulk(kept, o.bulk_fraction);
    if (bulk.size() >= 3) r_tilde_.add_realization(bulk);
    std::optional<UnfoldedSpectrum> fitted;
    if (bulk.size() >= o.unfolding_degree + 2) {
      // Spectra with no usable staircase fit still feed r~ and the density,
      // but not the unfolded statistics.
      try {
        fitted = unfold_adaptive(bulk, o.unfolding_degree);
      } catch (const UnfoldingError&) {
        unfold_skipped_ += 1.0;
      }
    }
    if (fitted) {
      const UnfoldedSpectrum& u = *fitted;
      unfold_spacing_sum_ += u.mean_spacing();
      unfold_spacing_sumsq_ += u.mean_spacing() * u.mean_spacing();
      unfold_spacing_max_dev_ = std::max(unfold_spacing_max_dev_, std::abs(u.mean_spacing() - 1.0));
      unfolded_ += 1.0;
      for (double s : normalized_spacings(u.levels)) spacing_.add(s);
      number_variance_.add_realization(u);
    }

    if (!o.hamiltonian_spectrum) {
      RealVector scaled;
      try {
        scaled = rescale_for_density(sorted, dimension, o.density_scaling);
      } catch (const DomainError&) {
        // A spectrum without spread has no shape to compare.
      }
      for (double x : scaled) {
        density_.add(x);
        density_sqrt_.add(x > 0.0 ? std::sqrt(x) : -1.0);
      }
    }
  }

  void merge(const SpectralStatistics& o) {
    r_tilde_.merge(o.r_tilde_);
    spacing_.merge(o.spacing_);
    number_variance_.merge(o.number_variance_);
    density_.merge(o.density_);
    density_sqrt_.merge(o.density_sqrt_);
    realizations_ += o.realizations_;
    kept_sum_ += o.kept_sum_;
    incomplete_truncations_ += o.incomplete_truncations_;
    purity_sum_ += o.purity_sum_;
    purity_sumsq_ += o.purity_sumsq_;
    unfold_spacing_sum_ += o.unfold_spacing_sum_;
    unfold_spacing_sumsq_ += o.unfold_spacing_sumsq_;
    unfolded_ += o.unfolded_;
    unfold_skipped_ += o.unfold_skipped_;
    max_trace_error_ = std::max(max_trace_error_, o.max_trace_error_);
    max_hermiticity_error_ = std::max(max_hermiticity_error_, o.max_hermiticity_error_);
    min_eigenvalue_ = std::min(min_eigenvalue_, o.min_eigenvalue_);
    unfold_spacing_max_dev_ = std::max(unfold_spacing_max_dev_, o.unfold_spacing_max_dev_);
  }

  const RTildeAccumulator& r_tilde() const { return r_tilde_; }
  const Histogram& spacing() const { return spacing_; }
  const NumberVarianceAccumulator& number_variance() const { return number_variance_; }
  const Histogram& density() const { return density_; }
  const Histogram& density_sqrt() const { return density_sqrt_; }
  double realizations() const { return realizations_; }
  double mean_kept() const { return realizations_ > 0.0 ? kept_sum_ / realizations_ : 0.0; }
  double incomplete_truncations() const { return incomplete_truncations_; }
  double mean_purity() const { return realizations_ > 0.0 ? purity_sum_ / realizations_ : 0.0; }
  double mean_unfolded_spacing() const { return unfolded_ > 0.0 ? unfold_spacing_sum_ / unfolded_ : 0.0; }
  double max_unfolded_spacing_deviation() const { return unfold_spacing_max_dev_; }
  double unfolded() const { return unfolded_; }
  double unfold_skipped() const { return unfold_skipped_; }
  double max_trace_error() const { return max_trace_error_; }
  double max_hermiticity_error() const { return max_hermiticity_error_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

  struct Scalars {
    double realizations, kept_sum, incomplete_truncations, purity_sum, purity_sumsq, unfold_spacing_sum,
        unfold_spacing_sumsq, unfolded, max_trace_error, max_hermiticity_error, min_eigenvalue, unfold_spacing_max_dev;
    double unfold_skipped = 0.0;
  };
  Scalars scalars() const {
    return {realizations_, kept_sum_, incomplete_truncations_, purity_sum_, purity_sumsq_,
            unfold_spacing_sum_, unfold_spacing_sumsq_, unfolded_, max_trace_error_, max_hermiticity_error_,
            min_eigenvalue_, unfold_spacing_max_dev_, unfold_skipped_};
  }
  void restore(const Scalars& s, const RTildeAccumulator& r, Histogram spacing, NumberVarianceAccumulator nv,
               Histogram density, Histogram density_sqrt) {
    realizations_ = s.realizations, kept_sum_ = s.kept_sum, incomplete_truncations_ = s.incomplete_truncations;
    purity_sum_ = s.purity_sum, purity_sumsq_ = s.purity_sumsq;
    unfold_spacing_sum_ = s.unfold_spacing_sum, unfold_spacing_sumsq_ = s.unfold_spacing_sumsq;
    unfolded_ = s.unfolded;
    max_trace_error_ = s.max_trace_error, max_hermiticity_error_ = s.max_hermiticity_error;
    min_eigenvalue_ = s.min_eigenvalue, unfold_spacing_max_dev_ = s.unfold_spacing_max_dev;
    unfold_skipped_ = s.unfold_skipped;
    r_tilde_ = r;
    spacing_ = std::move(spacing);
    number_variance_ = std::move(nv);
    density_ = std::move(density);
    density_sqrt_ = std::move(density_sqrt);
  }

 private:
  RTildeAccumulator r_tilde_;
  Histogram spacing_;
  NumberVarianceAccumulator number_variance_;
  Histogram density_;
  Histogram density_sqrt_;
  double realizations_ = 0.0, kept_sum_ = 0.0, incomplete_truncations_ = 0.0;
  double purity_sum_ = 0.0, purity_sumsq_ = 0.0;
  double unfold_spacing_sum_ = 0.0, unfold_spacing_sumsq_ = 0.0, unfolded_ = 0.0;
  double max_trace_error_ = 0.0, max_hermiticity_error_ = 0.0;
  double min_eigenvalue_ = std::numeric_limits<double>::infinity();
  double unfold_spacing_max_dev_ = 0.0;
  double unfold_skipped_ = 0.0;
};

inline ChiSquareResult surmise_test(const Histogram& spacing, SymmetryClass c) {
  return chi_square_test(spacing, [c](double s) { return wigner_surmise_cdf(std::max(0.0, s), c); });
}

inline ChiSquareResult marchenko_pastur_test(const Histogram& density) {
  return chi_square_test(density, marchenko_pastur_cdf);
}

inline ChiSquareResult quarter_circle_test(const Histogram& density_sqrt) {
  return chi_square_test(density_sqrt, quarter_circle_cdf);
}

}  // namespace rmtmix
