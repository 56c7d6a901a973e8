#pragma once

// Plot tables for the figure panels. One tab-separated file per panel with
// data columns next to the analytic curves evaluated on the same abscissae.
//
//   density          P(lambda) at Nt ~ 0.01, 1, 10 with Marchenko-Pastur
//   density-sqrt     P(y), y = sqrt(lambda), same times, quarter circle
//   r-tilde-nt       <r~> against Nt with the crossover fit and GOE/GUE levels
//   spacing          P(s) at the three times with both surmises
//   number-variance  Sigma^2(l) at the three times with GOE/GUE predictions
//   r-tilde-t        <r~> against t with the crossover fit
//   density-late     P(lambda) at the time nearest t = 100 with Marchenko-Pastur

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "rmtmix/runner/artifact.hpp"

namespace rmtmix::runner {

class MissingStatistics : public Error {
 public:
  using Error::Error;
};

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"density",         "density-sqrt", "r-tilde-nt",  "spacing",
                                            "number-variance", "r-tilde-t",    "density-late"};
  return ids;
}

namespace detail {

inline std::size_t nearest_index(const std::vector<double>& xs, double target) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < xs.size(); ++k)
    if (std::abs(std::log(xs[k] / target)) < std::abs(std::log(xs[best] / target))) best = k;
  return best;
}

inline std::vector<double> nt_values(const RunArtifact& a) {
  std::vector<double> out;
  const double n = static_cast<double>(a.config.hilbert_dimension());
  for (double t : a.times) out.push_back(n * t);
  return out;
}

/// Grid points nearest Nt = 0.01, 1, 10 (or the single time nearest t = 100).
inline std::vector<std::size_t> panel_times(const RunArtifact& a, bool late_only) {
  std::vector<double> xs;
  if (late_only) xs = a.times;
  else xs = nt_values(a);
  for (double& x : xs) x = std::max(x, 1e-300);
  if (late_only) return {nearest_index(xs, 100.0)};
  std::vector<std::size_t> out;
  for (double target : {0.01, 1.0, 10.0}) {
    const std::size_t k = nearest_index(xs, target);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

inline void require(bool ok, const std::string& figure, const std::string& what) {
  if (!ok) throw MissingStatistics(figure + " needs " + what);
}

inline void header(std::ostream& o, const RunArtifact& a, const std::string& figure,
                   const std::vector<std::size_t>& picked) {
  o << "# figure: " << figure << "\n"
    << "# config_hash: " << a.config_hash << "\n"
    << "# kind: " << to_string(a.config.kind) << "\n"
    << "# dimension: " << a.config.hilbert_dimension() << "\n"
    << "# realizations: " << a.realizations_done << "\n";
  for (std::size_t i = 0; i < picked.size(); ++i)
    o << "# series " << i << ": t = " << io::num(a.times[picked[i]])
      << ", Nt = " << io::num(a.times[picked[i]] * static_cast<double>(a.config.hilbert_dimension())) << "\n";
}

inline std::string time_label(const RunArtifact& a, std::size_t k, bool in_nt) {
  const double x = in_nt ? a.times[k] * static_cast<double>(a.config.hilbert_dimension()) : a.times[k];
  return std::string(in_nt ? "Nt=" : "t=") + io::num(x);
}

enum class HistogramKind { density, density_sqrt, spacing };

inline std::string histogram_panel(const RunArtifact& a, const std::string& figure, HistogramKind kind,
                                   bool late_only) {
  const char* name = kind == HistogramKind::density        ? "density histogram"
                     : kind == HistogramKind::density_sqrt ? "sqrt-density histogram"
                                                           : "spacing histogram";
  require(!a.stats.empty(), figure, std::string("per-time statistics with a ") + name + " (stats/time_<k>.tsv)");
  const auto picked = panel_times(a, late_only);
  auto hist = [&](std::size_t k) -> const Histogram& {
    const SpectralStatistics& s = a.stats[k];
    return kind == HistogramKind::density        ? s.density()
           : kind == HistogramKind::density_sqrt ? s.density_sqrt()
                                                 : s.spacing();
  };
  for (std::size_t k : picked)
    require(!hist(k).empty_layout() && hist(k).in_range() > 0.0, figure,
            std::string("a non-empty ") + name + " at " + time_label(a, k, !late_only));

  std::ostringstream o;
  header(o, a, figure, picked);
  const Histogram& ref = hist(picked.front());
  const std::string x = kind == HistogramKind::density ? "lambda" : kind == HistogramKind::density_sqrt ? "y" : "s";
  o << "#! columns\t" << x << "_lo\t" << x << "_hi\t" << x;
  for (std::size_t k : picked) o << "\tP(" << time_label(a, k, !late_only) << ")";
  if (kind == HistogramKind::density) o << "\tmarchenko_pastur";
  if (kind == HistogramKind::density_sqrt) o << "\tquarter_circle";
  if (kind == HistogramKind::spacing) o << "\tsurmise_goe\tsurmise_gue";
  o << "\n";
  std::vector<std::vector<double>> dens;
  for (std::size_t k : picked) dens.push_back(hist(k).densities());
  for (int b = 0; b < ref.bins(); ++b) {
    const double lo = ref.edge(b), hi = ref.edge(b + 1), c = ref.center(b);
    o << io::num(lo) << '\t' << io::num(hi) << '\t' << io::num(c);
    for (const auto& d : dens) o << '\t' << io::num(d[static_cast<std::size_t>(b)]);
    // Bin averages of the analytic densities so they compare with the bars.
    if (kind == HistogramKind::density) o << '\t' << io::num((marchenko_pastur_cdf(hi) - marchenko_pastur_cdf(lo)) / (hi - lo));
    if (kind == HistogramKind::density_sqrt) o << '\t' << io::num((quarter_circle_cdf(hi) - quarter_circle_cdf(lo)) / (hi - lo));
    if (kind == HistogramKind::spacing)
      o << '\t' << io::num(wigner_surmise(c, SymmetryClass::goe)) << '\t' << io::num(wigner_surmise(c, SymmetryClass::gue));
    o << "\n";
  }
  return o.str();
}

inline std::string r_tilde_panel(const RunArtifact& a, const std::string& figure, bool in_nt) {
  require(!a.stats.empty(), figure, "the r_tilde accumulator over the time grid (stats/time_<k>.tsv)");
  const NamedFit* fit = nullptr;
  const NamedFit* inner = nullptr;
  for (const auto& f : a.fits) {
    if (f.name == "r_tilde") fit = &f;
    if (f.name == "r_tilde_inner_shift") inner = &f;
  }
  std::ostringstream o;
  header(o, a, figure, {});
  if (fit) {
    o << "# fit: " << to_string(fit->model.form) << " on " << to_string(fit->model.abscissa);
    for (Eigen::Index j = 0; j < fit->result.parameters.size(); ++j)
      o << ", " << static_cast<char>('a' + j) << " = " << io::num(fit->result.parameters(j)) << " +- "
        << io::num(fit->result.std_errors(j));
    o << ", range [" << io::num(fit->result.x_min) << ", " << io::num(fit->result.x_max) << "]\n";
  }
  o << "#! columns\t" << (in_nt ? "Nt" : "t") << "\tr_tilde\tstd_error\tfit\tfit_inner_shift\tgoe\tgue\n";
  const double n = static_cast<double>(a.config.hilbert_dimension());
  auto eval = [&](const NamedFit* f, double t) {
    if (!f) return std::numeric_limits<double>::quiet_NaN();
    const double x = f->model.abscissa == FitAbscissa::nt ? n * t : t;
    return f->model(x, f->result.parameters);
  };
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    const auto& r = a.stats[k].r_tilde();
    o << io::num(in_nt ? n * a.times[k] : a.times[k]) << '\t' << io::num(r.mean()) << '\t' << io::num(r.std_error())
      << '\t' << io::num(eval(fit, a.times[k])) << '\t' << io::num(eval(inner, a.times[k])) << '\t'
      << io::num(kRTildeGoe) << '\t' << io::num(kRTildeGue) << "\n";
  }
  return o.str();
}

inline std::string number_variance_panel(const RunArtifact& a, const std::string& figure) {
  require(!a.stats.empty(), figure, "the number-variance accumulator over the time grid (stats/time_<k>.tsv)");
  const auto picked = panel_times(a, false);
  const auto& lengths = a.stats[picked.front()].number_variance().lengths();
  require(!lengths.empty(), figure, "a number-variance accumulator with at least one window length");
  std::ostringstream o;
  header(o, a, figure, picked);
  o << "#! columns\tlength";
  for (std::size_t k : picked) o << "\tsigma2(" << time_label(a, k, true) << ")";
  o << "\tgoe\tgue\n";
  std::vector<std::vector<double>> vals;
  for (std::size_t k : picked) vals.push_back(a.stats[k].number_variance().values());
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    o << io::num(lengths[i]);
    for (const auto& v : vals) o << '\t' << io::num(i < v.size() ? v[i] : std::numeric_limits<double>::quiet_NaN());
    o << '\t' << io::num(number_variance_goe(lengths[i])) << '\t' << io::num(number_variance_gue(lengths[i])) << "\n";
  }
  return o.str();
}

}  // namespace detail

/// Table text for one figure id; throws MissingStatistics naming what is absent.
inline std::string plot_table(const RunArtifact& a, const std::string& figure) {
  using detail::HistogramKind;
  if (figure == "density") return detail::histogram_panel(a, figure, HistogramKind::density, false);
  if (figure == "density-sqrt") return detail::histogram_panel(a, figure, HistogramKind::density_sqrt, false);
  if (figure == "r-tilde-nt") return detail::r_tilde_panel(a, figure, true);
  if (figure == "spacing") return detail::histogram_panel(a, figure, HistogramKind::spacing, false);
  if (figure == "number-variance") return detail::number_variance_panel(a, figure);
  if (figure == "r-tilde-t") return detail::r_tilde_panel(a, figure, false);
  if (figure == "density-late") return detail::histogram_panel(a, figure, HistogramKind::density, true);
  std::string known;
  for (const auto& id : figure_ids()) known += (known.empty() ? "" : ", ") + id;
  throw ConfigError("unknown figure '" + figure + "' (known: " + known + ")");
}

/// Writes <out_dir>/<figure>.tsv and returns its path.
inline std::filesystem::path emit_plot_data(const RunArtifact& a, const std::string& figure,
                                            const std::filesystem::path& out_dir) {
  const std::string text = plot_table(a, figure);
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / (figure + ".tsv");
  io::write_text_atomic(path, text);
  return path;
}

}  // namespace rmtmix::runner
