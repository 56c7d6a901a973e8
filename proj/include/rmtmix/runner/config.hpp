#pragma once

// Experiment configuration: INI grammar, validation, canonical text and
// content hash, and named presets.
//
// Sections and keys (defaults in parentheses):
//   [experiment] kind, seed (1), realizations, initial_state (basis | random-real),
//                basis_index (0), observable (density-matrix | hamiltonian),
//                ensemble_size (0 = dimension), allow_size_override (false),
//                per_time_refresh (false)
//   [system]     dimension, chain_length, n_up (-1 = kind default), disorder, alpha
//   [time]       grid (log | linear), start, stop, count, unit (nt | t)
//   [evolution]  propagator (auto | eigen | krylov), krylov_tolerance (1e-13)
//   [analysis]   truncation_tolerance, bulk_fraction, unfolding_degree,
//                spacing_bins, spacing_max, number_variance_lengths (comma list),
//                density_scaling (bulk-std | system-size), density_bins,
//                density_lo, density_hi
//   [fit]        form (kind default | none | scale-shift | scale-shift-amplitude |
//                scale-inner-shift), abscissa (nt | t), passes (5)
//   [short_time] order_dimension (32), order_points (6), order_lo (1e-3), order_hi (1e-2)
//   [run]        workers (0 = all cores), budget_flops (0 = unlimited), chunk_size (8)
// The [run] section does not affect results and is left out of the hash.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/uuid/detail/sha1.hpp>

#include "rmtmix/fitting.hpp"
#include "rmtmix/statistics.hpp"

namespace rmtmix::runner {

enum class ExperimentKind { goe_mix, gue_mix, crossover_hamiltonian, spin_hf, spin_oe, short_time_check };
enum class InitialStateKind { basis, random_real };
enum class TimeGridKind { log, linear };
enum class PropagatorKind { automatic, eigen, krylov };
enum class Observable { density_matrix, hamiltonian };

namespace detail {

template <typename E, std::size_t K>
using NameTable = std::array<std::pair<E, const char*>, K>;

inline constexpr NameTable<ExperimentKind, 6> kKindNames{{{ExperimentKind::goe_mix, "goe-mix"},
                                                         {ExperimentKind::gue_mix, "gue-mix"},
                                                         {ExperimentKind::crossover_hamiltonian, "crossover-hamiltonian"},
                                                         {ExperimentKind::spin_hf, "spin-hf"},
                                                         {ExperimentKind::spin_oe, "spin-oe"},
                                                         {ExperimentKind::short_time_check, "short-time-check"}}};
inline constexpr NameTable<InitialStateKind, 2> kStateNames{
    {{InitialStateKind::basis, "basis"}, {InitialStateKind::random_real, "random-real"}}};
inline constexpr NameTable<TimeGridKind, 2> kGridNames{{{TimeGridKind::log, "log"}, {TimeGridKind::linear, "linear"}}};
inline constexpr NameTable<PropagatorKind, 3> kPropagatorNames{
    {{PropagatorKind::automatic, "auto"}, {PropagatorKind::eigen, "eigen"}, {PropagatorKind::krylov, "krylov"}}};
inline constexpr NameTable<Observable, 2> kObservableNames{
    {{Observable::density_matrix, "density-matrix"}, {Observable::hamiltonian, "hamiltonian"}}};
inline constexpr NameTable<DensityScaling, 2> kScalingNames{
    {{DensityScaling::bulk_std, "bulk-std"}, {DensityScaling::system_size, "system-size"}}};
inline constexpr NameTable<FitAbscissa, 2> kAbscissaNames{{{FitAbscissa::nt, "nt"}, {FitAbscissa::t, "t"}}};

template <typename E, std::size_t K>
const char* name_of(const NameTable<E, K>& table, E e) {
  for (const auto& [v, n] : table)
    if (v == e) return n;
  return "?";
}

template <typename E, std::size_t K>
E parse_name(const NameTable<E, K>& table, const std::string& s, const std::string& key) {
  for (const auto& [v, n] : table)
    if (s == n) return v;
  std::string options;
  for (const auto& [v, n] : table) options += std::string(options.empty() ? "" : ", ") + n;
  throw ConfigError("invalid value '" + s + "' for " + key + " (expected one of: " + options + ")");
}

/// Shortest representation that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

}  // namespace detail

inline const char* to_string(ExperimentKind k) { return detail::name_of(detail::kKindNames, k); }
inline ExperimentKind parse_kind(const std::string& s) { return detail::parse_name(detail::kKindNames, s, "kind"); }

struct TimeGridSpec {
  TimeGridKind kind = TimeGridKind::log;
  double start = 1e-2;
  double stop = 1e1;
  int count = 16;
  bool in_units_of_nt = true;

  /// Grid values in the configured unit.
  std::vector<double> abscissae() const {
    std::vector<double> x(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      const double f = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
      x[static_cast<std::size_t>(k)] = kind == TimeGridKind::log
                                           ? std::exp(std::log(start) + f * (std::log(stop) - std::log(start)))
                                           : start + f * (stop - start);
    }
    if (count > 1) x.back() = stop;
    if (count > 0) x.front() = start;
    return x;
  }

  /// Physical times for Hilbert dimension n.
  std::vector<double> times(Eigen::Index n) const {
    auto x = abscissae();
    if (in_units_of_nt)
      for (double& v : x) v /= static_cast<double>(n);
    return x;
  }
};

struct FitSpec {
  bool enabled = false;
  FitForm form = FitForm::scale_shift;
  FitAbscissa abscissa = FitAbscissa::nt;
  int passes = 5;
};

struct ShortTimeSpec {
  int order_dimension = 32;
  int order_points = 6;
  double order_lo = 1e-3;  // in units of 2/sqrt(order_dimension)
  double order_hi = 1e-2;
};

struct RunSpec {
  int workers = 0;
  double budget_flops = 0.0;
  int chunk_size = 8;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::goe_mix;
  std::uint64_t seed = 1;
  int realizations = 1;
  InitialStateKind initial_state = InitialStateKind::basis;
  int basis_index = 0;
  Observable observable = Observable::density_matrix;
  int ensemble_size = 0;
  bool allow_size_override = false;
  bool per_time_refresh = false;

  int dimension = 0;
  int chain_length = 0;
  int n_up = -1;
  double disorder = 0.0;
  double alpha = 0.0;

  TimeGridSpec time;
  PropagatorKind propagator = PropagatorKind::automatic;
  double krylov_tolerance = 1e-13;
  AnalysisOptions analysis;
  FitSpec fit;
  ShortTimeSpec short_time;
  RunSpec run;

  bool is_spin() const { return kind == ExperimentKind::spin_hf || kind == ExperimentKind::spin_oe; }

  int effective_n_up() const {
    if (n_up >= 0) return n_up;
    return kind == ExperimentKind::spin_oe ? 1 : chain_length / 2;
  }

  /// Dimension of the Hilbert space the density matrices live in.
  Eigen::Index hilbert_dimension() const {
    if (kind == ExperimentKind::spin_hf) {
      std::uint64_t r = 1;
      const int k = effective_n_up();
      for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(chain_length - k + i) / static_cast<std::uint64_t>(i);
      return static_cast<Eigen::Index>(r);
    }
    if (kind == ExperimentKind::spin_oe) return chain_length;
    return dimension;
  }

  Eigen::Index members() const {
    if (observable == Observable::hamiltonian) return 1;
    return ensemble_size > 0 ? ensemble_size : hilbert_dimension();
  }
};

inline FitSpec default_fit(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::goe_mix: return {true, FitForm::scale_shift, FitAbscissa::nt, 5};
    case ExperimentKind::spin_hf: return {true, FitForm::scale_shift_amplitude, FitAbscissa::t, 5};
    case ExperimentKind::spin_oe: return {true, FitForm::scale_shift, FitAbscissa::t, 5};
    default: return {false, FitForm::scale_shift, FitAbscissa::nt, 5};
  }
}

inline TimeGridSpec default_time_grid(ExperimentKind k) {
  if (k == ExperimentKind::spin_hf || k == ExperimentKind::spin_oe) return {TimeGridKind::log, 1e-2, 1e2, 17, false};
  return {TimeGridKind::log, 1e-2, 1e1, 16, true};
}

inline ExperimentConfig default_config(ExperimentKind k) {
  ExperimentConfig c;
  c.kind = k;
  c.time = default_time_grid(k);
  c.fit = default_fit(k);
  if (k == ExperimentKind::spin_hf || k == ExperimentKind::spin_oe) c.initial_state = InitialStateKind::random_real;
  if (k == ExperimentKind::spin_hf || k == ExperimentKind::spin_oe) c.propagator = PropagatorKind::eigen;
  return c;
}

inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.realizations < 1) fail("experiment.realizations must be >= 1");
  if (c.realizations >= (1 << 24)) fail("experiment.realizations must be < 2^24");
  switch (c.kind) {
    case ExperimentKind::goe_mix:
    case ExperimentKind::gue_mix:
    case ExperimentKind::crossover_hamiltonian:
    case ExperimentKind::short_time_check:
      if (c.dimension < 2) fail("system.dimension must be >= 2 for kind " + std::string(to_string(c.kind)));
      break;
    case ExperimentKind::spin_hf:
      if (c.chain_length < 2 || c.chain_length > 20) fail("system.chain_length must be in [2, 20] for spin-hf");
      if (c.effective_n_up() < 0 || c.effective_n_up() > c.chain_length) fail("system.n_up must lie in [0, chain_length]");
      if (c.hilbert_dimension() < 3) fail("spin-hf subspace is too small");
      break;
    case ExperimentKind::spin_oe:
      if (c.chain_length < 3) fail("system.chain_length must be >= 3 for spin-oe");
      if (c.n_up >= 0 && c.n_up != 1) fail("spin-oe fixes n_up = 1");
      break;
  }
  if (c.is_spin() && !(c.disorder > 0.0)) fail("system.disorder must be > 0 for spin experiments");
  if (c.kind == ExperimentKind::crossover_hamiltonian && !std::isfinite(c.alpha)) fail("system.alpha must be finite");
  if (c.basis_index < 0 || c.basis_index >= c.hilbert_dimension()) fail("experiment.basis_index outside the Hilbert space");
  if (c.ensemble_size < 0) fail("experiment.ensemble_size must be >= 0");
  if (c.ensemble_size > 0 && c.ensemble_size != c.hilbert_dimension() && !c.allow_size_override)
    fail("experiment.ensemble_size " + std::to_string(c.ensemble_size) + " differs from the dimension " +
         std::to_string(c.hilbert_dimension()) + "; set allow_size_override = true to explore (exploratory results)");
  if (c.ensemble_size >= (1 << 20)) fail("experiment.ensemble_size must be < 2^20");

  const auto& t = c.time;
  if (t.count < 1 || t.count > 4000) fail("time.count must be in [1, 4000]");
  if (!(t.start >= 0.0) || !std::isfinite(t.stop)) fail("time.start must be >= 0 and time.stop finite");
  if (t.count > 1 && !(t.stop > t.start)) fail("time.stop must exceed time.start");
  if (t.kind == TimeGridKind::log && !(t.start > 0.0)) fail("time.start must be > 0 for a log grid");

  const auto& a = c.analysis;
  if (!(a.bulk_fraction > 0.0 && a.bulk_fraction <= 1.0)) fail("analysis.bulk_fraction must lie in (0, 1]");
  if (!(a.truncation_tolerance >= 0.0 && a.truncation_tolerance < 1.0)) fail("analysis.truncation_tolerance must lie in [0, 1)");
  if (a.unfolding_degree < 1 || a.unfolding_degree > 20) fail("analysis.unfolding_degree must lie in [1, 20]");
  if (a.spacing_bins < 2 || !(a.spacing_max > 0.0)) fail("analysis.spacing_bins must be >= 2 and spacing_max > 0");
  if (a.density_bins < 2 || !(a.density_hi > a.density_lo) || !(a.density_lo > 0.0))
    fail("analysis density range must satisfy 0 < density_lo < density_hi with >= 2 bins");
  if (a.number_variance_lengths.empty()) fail("analysis.number_variance_lengths must not be empty");
  for (double l : a.number_variance_lengths)
    if (!(l > 0.0)) fail("analysis.number_variance_lengths must be positive");
  if (c.fit.passes < 1 || c.fit.passes > 50) fail("fit.passes must lie in [1, 50]");
  if (!(c.krylov_tolerance > 0.0)) fail("evolution.krylov_tolerance must be > 0");
  if (c.short_time.order_dimension < 2 || c.short_time.order_points < 2 || !(c.short_time.order_lo > 0.0) ||
      !(c.short_time.order_hi > c.short_time.order_lo))
    fail("short_time order check needs order_dimension >= 2, order_points >= 2 and 0 < order_lo < order_hi");
  if (c.run.workers < 0) fail("run.workers must be >= 0");
  if (c.run.chunk_size < 1) fail("run.chunk_size must be >= 1");
  if (!(c.run.budget_flops >= 0.0)) fail("run.budget_flops must be >= 0");
}

namespace detail {

inline std::string fit_form_name(const FitSpec& f) { return f.enabled ? to_string(f.form) : "none"; }

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

}  // namespace detail

/// Sections in a fixed order with every key present; reparses to the same config.
inline std::string canonical_text(const ExperimentConfig& c, bool include_run = true) {
  using detail::format_double;
  std::ostringstream o;
  o << "[experiment]\n"
    << "kind = " << to_string(c.kind) << "\n"
    << "seed = " << c.seed << "\n"
    << "realizations = " << c.realizations << "\n"
    << "initial_state = " << detail::name_of(detail::kStateNames, c.initial_state) << "\n"
    << "basis_index = " << c.basis_index << "\n"
    << "observable = " << detail::name_of(detail::kObservableNames, c.observable) << "\n"
    << "ensemble_size = " << c.ensemble_size << "\n"
    << "allow_size_override = " << (c.allow_size_override ? "true" : "false") << "\n"
    << "per_time_refresh = " << (c.per_time_refresh ? "true" : "false") << "\n\n"
    << "[system]\n"
    << "dimension = " << c.dimension << "\n"
    << "chain_length = " << c.chain_length << "\n"
    << "n_up = " << c.n_up << "\n"
    << "disorder = " << format_double(c.disorder) << "\n"
    << "alpha = " << format_double(c.alpha) << "\n\n"
    << "[time]\n"
    << "grid = " << detail::name_of(detail::kGridNames, c.time.kind) << "\n"
    << "start = " << format_double(c.time.start) << "\n"
    << "stop = " << format_double(c.time.stop) << "\n"
    << "count = " << c.time.count << "\n"
    << "unit = " << (c.time.in_units_of_nt ? "nt" : "t") << "\n\n"
    << "[evolution]\n"
    << "propagator = " << detail::name_of(detail::kPropagatorNames, c.propagator) << "\n"
    << "krylov_tolerance = " << format_double(c.krylov_tolerance) << "\n\n"
    << "[analysis]\n"
    << "truncation_tolerance = " << format_double(c.analysis.truncation_tolerance) << "\n"
    << "bulk_fraction = " << format_double(c.analysis.bulk_fraction) << "\n"
    << "unfolding_degree = " << c.analysis.unfolding_degree << "\n"
    << "spacing_bins = " << c.analysis.spacing_bins << "\n"
    << "spacing_max = " << format_double(c.analysis.spacing_max) << "\n"
    << "number_variance_lengths = " << detail::join_doubles(c.analysis.number_variance_lengths) << "\n"
    << "density_scaling = " << detail::name_of(detail::kScalingNames, c.analysis.density_scaling) << "\n"
    << "density_bins = " << c.analysis.density_bins << "\n"
    << "density_lo = " << format_double(c.analysis.density_lo) << "\n"
    << "density_hi = " << format_double(c.analysis.density_hi) << "\n\n"
    << "[fit]\n"
    << "form = " << detail::fit_form_name(c.fit) << "\n"
    << "abscissa = " << detail::name_of(detail::kAbscissaNames, c.fit.abscissa) << "\n"
    << "passes = " << c.fit.passes << "\n\n"
    << "[short_time]\n"
    << "order_dimension = " << c.short_time.order_dimension << "\n"
    << "order_points = " << c.short_time.order_points << "\n"
    << "order_lo = " << format_double(c.short_time.order_lo) << "\n"
    << "order_hi = " << format_double(c.short_time.order_hi) << "\n";
  if (include_run)
    o << "\n[run]\n"
      << "workers = " << c.run.workers << "\n"
      << "budget_flops = " << format_double(c.run.budget_flops) << "\n"
      << "chunk_size = " << c.run.chunk_size << "\n";
  return o.str();
}

/// SHA-1 of the canonical text (without [run]) framed as a git blob.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string body = canonical_text(c, false);
  const std::string framed = "blob " + std::to_string(body.size()) + '\0' + body;
  boost::uuids::detail::sha1 h;
  h.process_bytes(framed.data(), framed.size());
  boost::uuids::detail::sha1::digest_type d;
  h.get_digest(d);
  std::ostringstream o;
  for (unsigned x : d) o << std::hex << std::setw(8) << std::setfill('0') << x;
  return o.str();
}

namespace detail {

class IniReader {
 public:
  explicit IniReader(const boost::property_tree::ptree& pt) : pt_(pt) {}

  bool has(const std::string& path) const { return pt_.get_optional<std::string>(path).has_value(); }

  std::string str(const std::string& path) {
    used_.insert(path);
    auto v = pt_.get_optional<std::string>(path);
    if (!v) throw ConfigError("missing key " + path);
    return trim(*v);
  }

  template <typename T>
  T num(const std::string& path) {
    const std::string s = str(path);
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw ConfigError("key " + path + ": cannot parse '" + s + "' as a number");
    return v;
  }

  bool boolean(const std::string& path) {
    const std::string s = str(path);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("key " + path + ": expected true or false, got '" + s + "'");
  }

  template <typename T>
  void opt_num(const std::string& path, T& out) {
    if (has(path)) out = num<T>(path);
  }
  void opt_bool(const std::string& path, bool& out) {
    if (has(path)) out = boolean(path);
  }

  void reject_unknown() const {
    for (const auto& [section, tree] : pt_) {
      if (tree.empty()) throw ConfigError("key '" + section + "' outside any section");
      for (const auto& [key, _] : tree) {
        const std::string path = section + "." + key;
        if (!used_.count(path)) throw ConfigError("unknown configuration key " + path);
      }
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

 private:
  const boost::property_tree::ptree& pt_;
  std::set<std::string> used_;
};

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("configuration syntax error: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  detail::IniReader r(pt);
  ExperimentConfig c = default_config(parse_kind(r.str("experiment.kind")));
  using namespace detail;

  r.opt_num("experiment.seed", c.seed);
  c.realizations = r.num<int>("experiment.realizations");
  if (r.has("experiment.initial_state"))
    c.initial_state = parse_name(kStateNames, r.str("experiment.initial_state"), "experiment.initial_state");
  r.opt_num("experiment.basis_index", c.basis_index);
  if (r.has("experiment.observable"))
    c.observable = parse_name(kObservableNames, r.str("experiment.observable"), "experiment.observable");
  r.opt_num("experiment.ensemble_size", c.ensemble_size);
  r.opt_bool("experiment.allow_size_override", c.allow_size_override);
  r.opt_bool("experiment.per_time_refresh", c.per_time_refresh);

  r.opt_num("system.dimension", c.dimension);
  r.opt_num("system.chain_length", c.chain_length);
  r.opt_num("system.n_up", c.n_up);
  r.opt_num("system.disorder", c.disorder);
  r.opt_num("system.alpha", c.alpha);

  if (r.has("time.grid")) c.time.kind = parse_name(kGridNames, r.str("time.grid"), "time.grid");
  r.opt_num("time.start", c.time.start);
  r.opt_num("time.stop", c.time.stop);
  r.opt_num("time.count", c.time.count);
  if (r.has("time.unit")) {
    const std::string u = r.str("time.unit");
    if (u != "nt" && u != "t") throw ConfigError("time.unit must be nt or t");
    c.time.in_units_of_nt = u == "nt";
  }

  if (r.has("evolution.propagator"))
    c.propagator = parse_name(kPropagatorNames, r.str("evolution.propagator"), "evolution.propagator");
  r.opt_num("evolution.krylov_tolerance", c.krylov_tolerance);

  auto& a = c.analysis;
  r.opt_num("analysis.truncation_tolerance", a.truncation_tolerance);
  r.opt_num("analysis.bulk_fraction", a.bulk_fraction);
  r.opt_num("analysis.unfolding_degree", a.unfolding_degree);
  r.opt_num("analysis.spacing_bins", a.spacing_bins);
  r.opt_num("analysis.spacing_max", a.spacing_max);
  if (r.has("analysis.number_variance_lengths")) {
    a.number_variance_lengths.clear();
    std::stringstream ss(r.str("analysis.number_variance_lengths"));
    for (std::string item; std::getline(ss, item, ',');) {
      item = IniReader::trim(item);
      double v{};
      const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (res.ec != std::errc() || res.ptr != item.data() + item.size())
        throw ConfigError("analysis.number_variance_lengths: cannot parse '" + item + "'");
      a.number_variance_lengths.push_back(v);
    }
  }
  if (r.has("analysis.density_scaling"))
    a.density_scaling = parse_name(kScalingNames, r.str("analysis.density_scaling"), "analysis.density_scaling");
  r.opt_num("analysis.density_bins", a.density_bins);
  r.opt_num("analysis.density_lo", a.density_lo);
  r.opt_num("analysis.density_hi", a.density_hi);

  if (r.has("fit.form")) {
    const std::string f = r.str("fit.form");
    if (f == "none") {
      c.fit.enabled = false;
    } else {
      c.fit.enabled = true;
      if (f == "scale-shift") c.fit.form = FitForm::scale_shift;
      else if (f == "scale-shift-amplitude") c.fit.form = FitForm::scale_shift_amplitude;
      else if (f == "scale-inner-shift") c.fit.form = FitForm::scale_inner_shift;
      else throw ConfigError("fit.form must be none, scale-shift, scale-shift-amplitude or scale-inner-shift");
    }
  }
  if (r.has("fit.abscissa")) c.fit.abscissa = parse_name(kAbscissaNames, r.str("fit.abscissa"), "fit.abscissa");
  r.opt_num("fit.passes", c.fit.passes);

  r.opt_num("short_time.order_dimension", c.short_time.order_dimension);
  r.opt_num("short_time.order_points", c.short_time.order_points);
  r.opt_num("short_time.order_lo", c.short_time.order_lo);
  r.opt_num("short_time.order_hi", c.short_time.order_hi);

  r.opt_num("run.workers", c.run.workers);
  r.opt_num("run.budget_flops", c.run.budget_flops);
  r.opt_num("run.chunk_size", c.run.chunk_size);

  r.reject_unknown();
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

struct Preset {
  std::string name;
  std::string description;
  ExperimentConfig config;
};

inline std::vector<Preset> presets() {
  std::vector<Preset> out;
  auto goe = [](int n, int m, int count) {
    ExperimentConfig c = default_config(ExperimentKind::goe_mix);
    c.dimension = n;
    c.realizations = m;
    c.time.count = count;
    return c;
  };
  out.push_back({"goe-mix-desk", "GOE mixing, N=256, M=700, 16 log times in Nt over [1e-2, 1e1]", goe(256, 700, 16)});
  out.push_back({"goe-mix-full", "GOE mixing, N=1024, M=round(5e5/N)=488", goe(1024, 488, 16)});
  {
    ExperimentConfig c = default_config(ExperimentKind::gue_mix);
    c.dimension = 128;
    c.realizations = 200;
    c.time.count = 7;
    out.push_back({"gue-mix-desk", "GUE mixing control, N=128, M=200", c});
  }
  {
    ExperimentConfig c = default_config(ExperimentKind::crossover_hamiltonian);
    c.dimension = 128;
    c.realizations = 100;
    c.alpha = 0.05;
    c.time.count = 7;
    out.push_back({"crossover-hamiltonian-desk", "mixing with H = S + i alpha A, N=128, alpha=0.05, M=100", c});
  }
  auto spin = [](ExperimentKind k, int l, double h, int m) {
    ExperimentConfig c = default_config(k);
    c.chain_length = l;
    c.disorder = h;
    c.realizations = m;
    return c;
  };
  out.push_back({"spin-hf-desk", "Heisenberg half filling, L=10 (N=252), h=0.5, M=50",
                 spin(ExperimentKind::spin_hf, 10, 0.5, 50)});
  out.push_back({"spin-hf-full", "Heisenberg half filling, L=12 (N=924), h=0.5, M=541 (hours)",
                 spin(ExperimentKind::spin_hf, 12, 0.5, 541)});
  out.push_back({"spin-oe-desk", "Heisenberg one excitation, L=256, h=0.1, M=64",
                 spin(ExperimentKind::spin_oe, 256, 0.1, 64)});
  out.push_back({"spin-oe-full", "Heisenberg one excitation, L=924, h=0.1, M=541 (hours)",
                 spin(ExperimentKind::spin_oe, 924, 0.1, 541)});
  {
    ExperimentConfig c = default_config(ExperimentKind::short_time_check);
    c.dimension = 512;
    c.realizations = 200;
    out.push_back({"short-time-check", "B and D second moments at N=512 over 200 ensembles, series order at N=32", c});
  }
  return out;
}

inline ExperimentConfig preset(const std::string& name) {
  for (auto& p : presets())
    if (p.name == name) return p.config;
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace rmtmix::runner
