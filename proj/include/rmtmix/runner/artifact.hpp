#pragma once

// Run artifacts on disk.
//
//   <dir>/config.snapshot     canonical configuration (reparseable INI)
//   <dir>/summary.txt         key = value run summary
//   <dir>/stats/time_<k>.tsv  pooled statistics at grid point k
//   <dir>/fits.tsv            crossover fits
//   <dir>/short_time.tsv      B/D moments and series order report (short-time-check)
//   <dir>/partials/           per-chunk statistics used to resume interrupted runs
//
// Tables are tab separated, UTF-8, doubles in shortest round-trip form. Lines
// starting with '#' are comments; "#! section <name>" opens a table and
// "#! columns ..." names its columns. Other "# key: value" comments carry metadata.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rmtmix/runner/config.hpp"
#include "rmtmix/short_time.hpp"

#ifndef RMTMIX_VERSION
#define RMTMIX_VERSION "0.1.0"
#endif

namespace rmtmix::runner {

struct NamedFit {
  std::string name;
  CrossoverFitModel model;
  FitResult result;
};

struct ShortTimeOutcome {
  CrossoverMomentAccumulator::Report moments;
  SeriesOrderReport order;
  std::vector<std::string> warnings;
};

struct RunArtifact {
  ExperimentConfig config;
  std::string config_hash;
  std::string version = RMTMIX_VERSION;
  std::vector<double> abscissae;  // grid in configured units
  std::vector<double> times;      // physical times
  std::vector<SpectralStatistics> stats;
  std::vector<NamedFit> fits;
  std::optional<ShortTimeOutcome> short_time;
  double wall_seconds = 0.0;
  int workers = 1;
  std::size_t realizations_done = 0;
  bool complete = true;
  std::string failure;
  std::vector<std::string> warnings;
};

class ArtifactError : public Error {
 public:
  using Error::Error;
};

namespace io {

using detail::format_double;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw ArtifactError("table has no column '" + name + "'");
  }
  double number(std::size_t row, const std::string& name) const { return parse(rows.at(row).at(column(name))); }

  static double parse(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ArtifactError("cannot parse number '" + s + "'");
    return v;
  }
};

struct Document {
  std::map<std::string, std::string> meta;
  std::map<std::string, Table> tables;

  const Table& table(const std::string& name) const {
    const auto it = tables.find(name);
    if (it == tables.end()) throw ArtifactError("missing section '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return tables.count(name) > 0; }
  const std::string& get(const std::string& key) const {
    const auto it = meta.find(key);
    if (it == meta.end()) throw ArtifactError("missing metadata '" + key + "'");
    return it->second;
  }
};

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == '\t') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline Document read_document(std::istream& in) {
  Document d;
  Table* current = nullptr;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    if (line.rfind("#! section ", 0) == 0) {
      current = &d.tables[line.substr(11)];
      continue;
    }
    if (line.rfind("#! columns", 0) == 0) {
      if (!current) throw ArtifactError("columns line outside a section");
      auto cols = split_tabs(line.substr(10));
      if (!cols.empty() && cols.front().empty()) cols.erase(cols.begin());
      current->columns = cols;
      continue;
    }
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (colon != std::string::npos && line.size() > 2) {
        std::string key = line.substr(1, colon - 1);
        key.erase(0, key.find_first_not_of(' '));
        d.meta[key] = line.substr(colon + 2);
      }
      continue;
    }
    if (!current) throw ArtifactError("data row outside a section");
    current->rows.push_back(split_tabs(line));
  }
  return d;
}

inline Document read_document_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ArtifactError("cannot open " + p.string());
  return read_document(in);
}

inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return format_double(x);
}

class Writer {
 public:
  explicit Writer(std::ostream& o) : o_(o) {}
  void meta(const std::string& key, const std::string& value) { o_ << "# " << key << ": " << value << "\n"; }
  void section(const std::string& name, const std::vector<std::string>& columns) {
    o_ << "#! section " << name << "\n#! columns";
    for (const auto& c : columns) o_ << '\t' << c;
    o_ << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) o_ << (i ? "\t" : "") << cells[i];
    o_ << "\n";
  }
  void row(std::initializer_list<double> cells) {
    std::vector<std::string> s;
    for (double c : cells) s.push_back(num(c));
    row(s);
  }

 private:
  std::ostream& o_;
};

inline void write_histogram(Writer& w, const std::string& name, const Histogram& h) {
  w.section(name + "_layout", {"lo", "hi", "bins", "underflow", "overflow", "in_range"});
  w.row({h.lo(), h.hi(), static_cast<double>(h.bins()), h.underflow(), h.overflow(), h.in_range()});
  w.section(name, {"bin_lo", "bin_hi", "count", "density"});
  const auto dens = h.densities();
  for (int k = 0; k < h.bins(); ++k)
    w.row({h.edge(k), h.edge(k + 1), h.counts()[static_cast<std::size_t>(k)], dens[static_cast<std::size_t>(k)]});
}

inline Histogram read_histogram(const Document& d, const std::string& name) {
  const Table& lay = d.table(name + "_layout");
  Histogram h(lay.number(0, "lo"), lay.number(0, "hi"), static_cast<int>(lay.number(0, "bins")));
  const Table& t = d.table(name);
  std::vector<double> counts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) counts.push_back(t.number(r, "count"));
  h.set_raw(std::move(counts), lay.number(0, "underflow"), lay.number(0, "overflow"));
  return h;
}

inline void write_statistics(std::ostream& o, const SpectralStatistics& s) {
  Writer w(o);
  const auto sc = s.scalars();
  w.section("scalars", {"key", "value"});
  const std::vector<std::pair<std::string, double>> kv{{"realizations", sc.realizations},
                                                       {"kept_sum", sc.kept_sum},
                                                       {"incomplete_truncations", sc.incomplete_truncations},
                                                       {"purity_sum", sc.purity_sum},
                                                       {"purity_sumsq", sc.purity_sumsq},
                                                       {"unfold_spacing_sum", sc.unfold_spacing_sum},
                                                       {"unfold_spacing_sumsq", sc.unfold_spacing_sumsq},
                                                       {"unfolded", sc.unfolded},
                                                       {"max_trace_error", sc.max_trace_error},
                                                       {"max_hermiticity_error", sc.max_hermiticity_error},
                                                       {"min_eigenvalue", sc.min_eigenvalue},
                                                       {"unfold_spacing_max_dev", sc.unfold_spacing_max_dev},
                                                       {"unfold_skipped", sc.unfold_skipped}};
  for (const auto& [k, v] : kv) w.row({k, num(v)});

  const auto r = s.r_tilde().raw();
  w.section("r_tilde", {"mean", "std_error", "sum", "count", "batch_sum", "batch_sumsq", "batches", "skipped"});
  w.row({s.r_tilde().mean(), s.r_tilde().std_error(), r.sum, r.count, r.batch_sum, r.batch_sumsq, r.batches,
         static_cast<double>(r.skipped)});

  write_histogram(w, "spacing", s.spacing());
  write_histogram(w, "density", s.density());
  write_histogram(w, "density_sqrt", s.density_sqrt());

  const auto& nv = s.number_variance();
  const auto values = nv.values();
  w.section("number_variance", {"length", "sigma2", "excluded_realizations"});
  for (std::size_t k = 0; k < nv.lengths().size(); ++k) w.row({nv.lengths()[k], values[k], nv.excluded(k)});
  w.section("number_variance_cells", {"length_index", "position", "n", "sum", "sumsq"});
  for (std::size_t k = 0; k < nv.lengths().size(); ++k)
    for (const auto& [j, c] : nv.cells(k))
      w.row({static_cast<double>(k), static_cast<double>(j), c.n, c.s, c.ss});
}

inline SpectralStatistics read_statistics(const Document& d) {
  const Table& sc = d.table("scalars");
  std::map<std::string, double> kv;
  for (const auto& row : sc.rows) kv[row.at(0)] = Table::parse(row.at(1));
  auto get = [&](const char* k) {
    const auto it = kv.find(k);
    if (it == kv.end()) throw ArtifactError(std::string("missing scalar '") + k + "'");
    return it->second;
  };
  SpectralStatistics::Scalars s{get("realizations"),         get("kept_sum"),   get("incomplete_truncations"),
                                get("purity_sum"),           get("purity_sumsq"), get("unfold_spacing_sum"),
                                get("unfold_spacing_sumsq"), get("unfolded"),   get("max_trace_error"),
                                get("max_hermiticity_error"), get("min_eigenvalue"), get("unfold_spacing_max_dev"),
                                kv.count("unfold_skipped") ? kv.at("unfold_skipped") : 0.0};
  const Table& rt = d.table("r_tilde");
  const RTildeAccumulator r = RTildeAccumulator::from_raw(
      {rt.number(0, "sum"), rt.number(0, "count"), rt.number(0, "batch_sum"), rt.number(0, "batch_sumsq"),
       rt.number(0, "batches"), static_cast<std::size_t>(rt.number(0, "skipped"))});

  const Table& nvt = d.table("number_variance");
  std::vector<double> lengths;
  for (std::size_t i = 0; i < nvt.rows.size(); ++i) lengths.push_back(nvt.number(i, "length"));
  NumberVarianceAccumulator nv(lengths);
  std::vector<std::map<std::int64_t, NumberVarianceAccumulator::Cell>> cells(lengths.size());
  const Table& ct = d.table("number_variance_cells");
  for (std::size_t i = 0; i < ct.rows.size(); ++i) {
    const auto k = static_cast<std::size_t>(ct.number(i, "length_index"));
    if (k >= lengths.size()) throw ArtifactError("number_variance_cells: length index out of range");
    cells[k][static_cast<std::int64_t>(ct.number(i, "position"))] = {ct.number(i, "n"), ct.number(i, "sum"),
                                                                      ct.number(i, "sumsq")};
  }
  for (std::size_t k = 0; k < lengths.size(); ++k)
    nv.set_cells(k, std::move(cells[k]), nvt.number(k, "excluded_realizations"));

  SpectralStatistics out;
  out.restore(s, r, read_histogram(d, "spacing"), std::move(nv), read_histogram(d, "density"),
              read_histogram(d, "density_sqrt"));
  return out;
}

inline void write_fits(std::ostream& o, const std::vector<NamedFit>& fits, const std::string& hash) {
  Writer w(o);
  w.meta("config_hash", hash);
  w.section("fits", {"name", "form", "abscissa", "a", "b", "c", "a_err", "b_err", "c_err", "rss", "iterations",
                     "converged", "gradient", "x_min", "x_max", "points"});
  for (const auto& f : fits) {
    const auto& p = f.result.parameters;
    const auto& e = f.result.std_errors;
    auto at = [](const RealVector& v, Eigen::Index i) {
      return i < v.size() ? num(v(i)) : std::string("nan");
    };
    w.row({f.name, to_string(f.model.form), to_string(f.model.abscissa), at(p, 0), at(p, 1), at(p, 2), at(e, 0),
           at(e, 1), at(e, 2), num(f.result.rss), std::to_string(f.result.iterations),
           f.result.converged ? "true" : "false", num(f.result.gradient_norm), num(f.result.x_min),
           num(f.result.x_max), std::to_string(f.result.points)});
  }
}

inline std::vector<NamedFit> read_fits(const Document& d) {
  std::vector<NamedFit> out;
  if (!d.has("fits")) return out;
  const Table& t = d.table("fits");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    NamedFit f;
    f.name = t.rows[r].at(t.column("name"));
    const std::string form = t.rows[r].at(t.column("form"));
    f.model.form = form == "scale-shift-amplitude" ? FitForm::scale_shift_amplitude
                   : form == "scale-inner-shift"   ? FitForm::scale_inner_shift
                                                   : FitForm::scale_shift;
    f.model.abscissa = t.rows[r].at(t.column("abscissa")) == "t" ? FitAbscissa::t : FitAbscissa::nt;
    const int np = f.model.parameter_count();
    f.result.parameters.resize(np);
    f.result.std_errors.resize(np);
    const char* pn[] = {"a", "b", "c"};
    const char* en[] = {"a_err", "b_err", "c_err"};
    for (int i = 0; i < np; ++i) {
      f.result.parameters(i) = t.number(r, pn[i]);
      f.result.std_errors(i) = t.number(r, en[i]);
    }
    f.result.rss = t.number(r, "rss");
    f.result.iterations = static_cast<int>(t.number(r, "iterations"));
    f.result.converged = t.rows[r].at(t.column("converged")) == "true";
    f.result.gradient_norm = t.number(r, "gradient");
    f.result.x_min = t.number(r, "x_min");
    f.result.x_max = t.number(r, "x_max");
    f.result.points = static_cast<std::size_t>(t.number(r, "points"));
    out.push_back(std::move(f));
  }
  return out;
}

inline void write_short_time(std::ostream& o, const ShortTimeOutcome& s, const std::string& hash) {
  Writer w(o);
  w.meta("config_hash", hash);
  w.meta("ensembles", std::to_string(s.moments.ensembles));
  w.meta("dimension", std::to_string(s.moments.dimension));
  w.section("moments", {"quantity", "value", "std_error", "target", "z"});
  const std::vector<std::pair<std::string, CrossoverMomentAccumulator::Moment>> m{
      {"B_mean", s.moments.b_mean},
      {"B_diag_var", s.moments.b_diag_var},
      {"B_offdiag_var", s.moments.b_offdiag_var},
      {"D_offdiag_var", s.moments.d_offdiag_var}};
  for (const auto& [k, v] : m) w.row({k, num(v.value), num(v.std_error), num(v.target), num(v.z())});
  w.section("series_order", {"t", "frobenius_error"});
  for (std::size_t i = 0; i < s.order.times.size(); ++i) w.row({s.order.times[i], s.order.errors[i]});
  w.section("series_slope", {"slope"});
  w.row({s.order.slope});
}

inline ShortTimeOutcome read_short_time(const Document& d) {
  ShortTimeOutcome s;
  s.moments.ensembles = static_cast<std::size_t>(Table::parse(d.get("ensembles")));
  s.moments.dimension = static_cast<Eigen::Index>(Table::parse(d.get("dimension")));
  const Table& m = d.table("moments");
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    const std::string q = m.rows[r].at(0);
    CrossoverMomentAccumulator::Moment v{m.number(r, "value"), m.number(r, "std_error"), m.number(r, "target")};
    if (q == "B_mean") s.moments.b_mean = v;
    else if (q == "B_diag_var") s.moments.b_diag_var = v;
    else if (q == "B_offdiag_var") s.moments.b_offdiag_var = v;
    else if (q == "D_offdiag_var") s.moments.d_offdiag_var = v;
  }
  const Table& so = d.table("series_order");
  for (std::size_t r = 0; r < so.rows.size(); ++r) {
    s.order.times.push_back(so.number(r, "t"));
    s.order.errors.push_back(so.number(r, "frobenius_error"));
  }
  s.order.slope = d.table("series_slope").number(0, "slope");
  return s;
}

inline void write_text_atomic(const std::filesystem::path& p, const std::string& text) {
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ArtifactError("cannot write " + tmp);
    out << text;
    if (!out) throw ArtifactError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, p);
}

}  // namespace io

inline std::string time_file_name(std::size_t k) { return "time_" + std::to_string(k) + ".tsv"; }

inline std::string statistics_text(const RunArtifact& a, std::size_t k) {
  std::ostringstream o;
  io::Writer w(o);
  w.meta("rmtmix_statistics", a.version);
  w.meta("config_hash", a.config_hash);
  w.meta("index", std::to_string(k));
  w.meta("time", io::num(a.times.at(k)));
  w.meta("abscissa", io::num(a.abscissae.at(k)));
  io::write_statistics(o, a.stats.at(k));
  return o.str();
}

inline std::string summary_text(const RunArtifact& a) {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
  o << "# rmtmix run summary\n";
  kv("version", a.version);
  kv("config_hash", a.config_hash);
  kv("kind", to_string(a.config.kind));
  kv("hilbert_dimension", std::to_string(a.config.hilbert_dimension()));
  kv("ensemble_size", std::to_string(a.config.members()));
  kv("realizations", std::to_string(a.config.realizations));
  kv("realizations_done", std::to_string(a.realizations_done));
  kv("n_times_m", std::to_string(a.config.hilbert_dimension() * a.config.realizations));
  kv("complete", a.complete ? "true" : "false");
  if (!a.failure.empty()) kv("failure", a.failure);
  kv("wall_seconds", io::num(a.wall_seconds));
  kv("workers", std::to_string(a.workers));
  kv("time_count", std::to_string(a.times.size()));
  double trace = 0.0, herm = 0.0, mineig = std::numeric_limits<double>::infinity();
  for (const auto& s : a.stats) {
    trace = std::max(trace, s.max_trace_error());
    herm = std::max(herm, s.max_hermiticity_error());
    mineig = std::min(mineig, s.min_eigenvalue());
  }
  kv("max_trace_error", io::num(trace));
  kv("max_hermiticity_error", io::num(herm));
  kv("min_eigenvalue", io::num(mineig));
  for (std::size_t i = 0; i < a.warnings.size(); ++i) kv("warning." + std::to_string(i), a.warnings[i]);
  for (std::size_t k = 0; k < a.stats.size(); ++k) {
    const std::string p = "time." + std::to_string(k) + ".";
    kv(p + "t", io::num(a.times[k]));
    kv(p + "abscissa", io::num(a.abscissae[k]));
    kv(p + "r_tilde", io::num(a.stats[k].r_tilde().mean()));
    kv(p + "r_tilde_std_error", io::num(a.stats[k].r_tilde().std_error()));
    kv(p + "mean_purity", io::num(a.stats[k].mean_purity()));
    kv(p + "mean_kept", io::num(a.stats[k].mean_kept()));
  }
  for (std::size_t i = 0; i < a.fits.size(); ++i) {
    const auto& f = a.fits[i];
    const std::string p = "fit." + std::to_string(i) + ".";
    kv(p + "name", f.name);
    kv(p + "form", to_string(f.model.form));
    for (Eigen::Index j = 0; j < f.result.parameters.size(); ++j) {
      const std::string pn(1, static_cast<char>('a' + j));
      kv(p + pn, io::num(f.result.parameters(j)));
      kv(p + pn + "_std_error", io::num(f.result.std_errors(j)));
    }
    kv(p + "converged", f.result.converged ? "true" : "false");
  }
  if (a.short_time) {
    const auto& m = a.short_time->moments;
    kv("short_time.ensembles", std::to_string(m.ensembles));
    kv("short_time.B_mean", io::num(m.b_mean.value));
    kv("short_time.B_diag_var", io::num(m.b_diag_var.value));
    kv("short_time.B_offdiag_var", io::num(m.b_offdiag_var.value));
    kv("short_time.D_offdiag_var", io::num(m.d_offdiag_var.value));
    kv("short_time.series_slope", io::num(a.short_time->order.slope));
  }
  return o.str();
}

inline void write_artifact(const std::filesystem::path& dir, const RunArtifact& a) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "stats");
  io::write_text_atomic(dir / "config.snapshot", canonical_text(a.config));
  for (std::size_t k = 0; k < a.stats.size(); ++k)
    io::write_text_atomic(dir / "stats" / time_file_name(k), statistics_text(a, k));
  {
    std::ostringstream o;
    io::write_fits(o, a.fits, a.config_hash);
    io::write_text_atomic(dir / "fits.tsv", o.str());
  }
  if (a.short_time) {
    std::ostringstream o;
    io::write_short_time(o, *a.short_time, a.config_hash);
    io::write_text_atomic(dir / "short_time.tsv", o.str());
  }
  io::write_text_atomic(dir / "summary.txt", summary_text(a));
}

inline std::map<std::string, std::string> read_summary(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ArtifactError("cannot open " + p.string());
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

inline RunArtifact read_artifact(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ArtifactError("artifact directory " + dir.string() + " does not exist");
  RunArtifact a;
  a.config = load_config((dir / "config.snapshot").string());
  a.config_hash = config_hash(a.config);
  const auto summary = read_summary(dir / "summary.txt");
  auto get = [&](const std::string& k) -> std::string {
    const auto it = summary.find(k);
    return it == summary.end() ? std::string() : it->second;
  };
  if (!get("config_hash").empty() && get("config_hash") != a.config_hash)
    throw ArtifactError("summary hash does not match config.snapshot");
  a.version = get("version");
  a.complete = get("complete") != "false";
  a.failure = get("failure");
  if (!get("wall_seconds").empty()) a.wall_seconds = io::Table::parse(get("wall_seconds"));
  if (!get("workers").empty()) a.workers = std::stoi(get("workers"));
  if (!get("realizations_done").empty()) a.realizations_done = std::stoull(get("realizations_done"));
  for (std::size_t i = 0; summary.count("warning." + std::to_string(i)); ++i)
    a.warnings.push_back(summary.at("warning." + std::to_string(i)));

  for (std::size_t k = 0; fs::exists(dir / "stats" / time_file_name(k)); ++k) {
    const auto d = io::read_document_file(dir / "stats" / time_file_name(k));
    a.times.push_back(io::Table::parse(d.get("time")));
    a.abscissae.push_back(io::Table::parse(d.get("abscissa")));
    a.stats.push_back(io::read_statistics(d));
  }
  if (fs::exists(dir / "fits.tsv")) a.fits = io::read_fits(io::read_document_file(dir / "fits.tsv"));
  if (fs::exists(dir / "short_time.tsv")) a.short_time = io::read_short_time(io::read_document_file(dir / "short_time.tsv"));
  return a;
}

}  // namespace rmtmix::runner
