#pragma once

// Experiment driver. Realizations are grouped into fixed chunks of
// `run.chunk_size`; workers take chunks in any order but chunk results are
// merged in chunk order, so pooled statistics do not depend on the worker count.
// Every random draw comes from a stream addressed by (purpose, realization,
// member, extra), which makes a realization reproducible on its own.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

#include "rmtmix/ensembles.hpp"
#include "rmtmix/evolution.hpp"
#include "rmtmix/runner/artifact.hpp"
#include "rmtmix/runner/cost.hpp"
#include "rmtmix/short_time.hpp"
#include "rmtmix/spin_chain.hpp"

namespace rmtmix::runner {

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  bool resume = false;
  std::optional<int> workers;
  std::optional<double> budget_flops;
  std::function<void(const std::string&)> log;
  /// Called before every attempt of a realization; throwing simulates a failure.
  std::function<void(std::size_t realization, int attempt)> before_realization;
};

/// CLI value, then RMTMIX_WORKERS, then the config, then the hardware.
inline int resolve_workers(const ExperimentConfig& c, std::optional<int> cli) {
  if (cli && *cli > 0) return *cli;
  if (const char* env = std::getenv("RMTMIX_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("RMTMIX_WORKERS must be a positive integer, got '") + env + "'");
  }
  if (c.run.workers > 0) return c.run.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Time points actually analyzed: the configured grid, or {0} for Hamiltonian spectra.
inline std::vector<double> run_times(const ExperimentConfig& c) {
  if (c.observable == Observable::hamiltonian) return {0.0};
  return c.time.times(c.hilbert_dimension());
}

inline std::vector<double> run_abscissae(const ExperimentConfig& c) {
  if (c.observable == Observable::hamiltonian) return {0.0};
  return c.time.abscissae();
}

inline AnalysisOptions run_analysis(const ExperimentConfig& c) {
  AnalysisOptions a = c.analysis;
  if (c.observable == Observable::hamiltonian) a.hamiltonian_spectrum = true;
  return a;
}

namespace detail {

inline RngStream stream(const ExperimentConfig& c, StreamPurpose p, std::size_t m, Eigen::Index l = 0, int extra = 0) {
  return RngStream(c.seed, make_stream_id(p, m, static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(extra)));
}

inline PureState initial_state(const ExperimentConfig& c, std::size_t m) {
  const Eigen::Index n = c.hilbert_dimension();
  if (c.initial_state == InitialStateKind::basis) return basis_state(n, c.basis_index);
  RngStream rng = stream(c, StreamPurpose::initial_state, m);
  return sample_real_state(n, rng);
}

/// Member l of realization m; a real Hamiltonian is returned as real symmetric.
struct Member {
  std::optional<RealSymmetricMatrix> real;
  std::optional<HermitianMatrix> complex;
};

inline Member sample_member(const ExperimentConfig& c, const std::optional<SubspaceBasis>& basis, std::size_t m,
                            Eigen::Index l, int extra) {
  const Eigen::Index n = c.hilbert_dimension();
  switch (c.kind) {
    case ExperimentKind::goe_mix:
    case ExperimentKind::short_time_check: {
      RngStream rng = stream(c, StreamPurpose::hamiltonian, m, l, extra);
      return {sample_goe(n, rng), std::nullopt};
    }
    case ExperimentKind::gue_mix: {
      RngStream rng = stream(c, StreamPurpose::hamiltonian, m, l, extra);
      return {std::nullopt, sample_gue(n, rng)};
    }
    case ExperimentKind::crossover_hamiltonian: {
      RngStream rs = stream(c, StreamPurpose::hamiltonian, m, l, extra);
      RngStream ra = stream(c, StreamPurpose::antisymmetric, m, l, extra);
      const RealSymmetricMatrix s = sample_goe(n, rs);
      const RealAntisymmetricMatrix a = sample_antisymmetric(n, ra);
      return {std::nullopt, crossover_hamiltonian(s, a, c.alpha)};
    }
    case ExperimentKind::spin_hf: {
      RngStream rng = stream(c, StreamPurpose::disorder, m, l, extra);
      return {heisenberg(*basis, sample_disorder(c.chain_length, c.disorder, rng)), std::nullopt};
    }
    case ExperimentKind::spin_oe: {
      RngStream rng = stream(c, StreamPurpose::disorder, m, l, extra);
      return {one_excitation_hamiltonian(c.chain_length, sample_disorder(c.chain_length, c.disorder, rng)),
              std::nullopt};
    }
  }
  throw ConfigError("unknown experiment kind");
}

template <typename Scalar, typename Wrapped>
void add_propagated(MixedStateBuilder& b, const Wrapped& h, const ExperimentConfig& c) {
  const PureState& psi0 = b.initial_state();
  const Eigen::Index n = psi0.dim();
  if (c.propagator != PropagatorKind::eigen && (std::is_same_v<Scalar, Complex> || psi0.is_real())) {
    KrylovOptions o;
    o.tolerance = c.krylov_tolerance;
    o.max_dimension = c.propagator == PropagatorKind::automatic ? std::max<Eigen::Index>(8, n / 4) : 0;
    VectorOf<Scalar> start;
    if constexpr (std::is_same_v<Scalar, double>) start = psi0.amplitudes().real();
    else start = psi0.amplitudes();
    if (auto k = KrylovPropagator<Scalar>::build(h.entries(), start, b.max_time(), o)) {
      b.add(*k);
      return;
    }
  }
  const auto d = decompose(h);
  b.add(EigenbasisPropagator<Scalar>(d, psi0));
}

inline void add_member(MixedStateBuilder& b, const Member& h, const ExperimentConfig& c) {
  if (h.real) add_propagated<double>(b, *h.real, c);
  else add_propagated<Complex>(b, *h.complex, c);
}

inline void analyze_density(const DensityMatrix& rho, const AnalysisOptions& a, SpectralStatistics& out) {
  const ComplexMatrix& e = rho.entries();
  SpectrumDiagnostics diag;
  diag.purity = e.squaredNorm();
  diag.trace_error = std::abs(e.trace() - Complex(1.0));
  diag.hermiticity_error = (e - e.adjoint()).cwiseAbs().maxCoeff();
  out.add_spectrum(spectrum(rho), rho.dim(), a, diag);
}

}  // namespace detail

/// Adds realization m to `stats` (one entry per analyzed time).
inline void run_realization(const ExperimentConfig& c, std::size_t m, std::vector<SpectralStatistics>& stats) {
  const Eigen::Index n = c.hilbert_dimension();
  const AnalysisOptions a = run_analysis(c);
  std::optional<SubspaceBasis> basis;
  if (c.kind == ExperimentKind::spin_hf) basis.emplace(c.chain_length, c.effective_n_up());

  if (c.observable == Observable::hamiltonian) {
    const detail::Member h = detail::sample_member(c, basis, m, 0, 0);
    const RealVector eigs = h.real ? linalg::eigenvalues_hermitian(h.real->entries())
                                   : linalg::eigenvalues_hermitian(h.complex->entries());
    stats.at(0).add_spectrum(eigs, n, a);
    return;
  }

  const PureState psi0 = detail::initial_state(c, m);
  const std::vector<double> times = run_times(c);
  const Eigen::Index members = c.members();
  if (c.per_time_refresh) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      MixedStateBuilder b(psi0, {times[k]}, members, c.allow_size_override);
      for (Eigen::Index l = 0; l < members; ++l)
        detail::add_member(b, detail::sample_member(c, basis, m, l, static_cast<int>(k) + 1), c);
      detail::analyze_density(b.density_at(0), a, stats.at(k));
    }
    return;
  }
  MixedStateBuilder b(psi0, times, members, c.allow_size_override);
  for (Eigen::Index l = 0; l < members; ++l) detail::add_member(b, detail::sample_member(c, basis, m, l, 0), c);
  for (std::size_t k = 0; k < times.size(); ++k) detail::analyze_density(b.density_at(k), a, stats.at(k));
}

/// B and D for ensemble m of the short-time check (initial state |0>).
inline CrossoverMatrices short_time_ensemble(const ExperimentConfig& c, std::size_t m) {
  const Eigen::Index n = c.dimension;
  CrossoverMatrixBuilder b(n, c.members(), c.allow_size_override);
  for (Eigen::Index l = 0; l < c.members(); ++l) {
    RngStream rng = detail::stream(c, StreamPurpose::hamiltonian, m, l);
    b.add(sample_goe(n, rng));
  }
  return b.finish();
}

/// Third-order series against exact evolution at the configured small dimension.
inline SeriesOrderReport short_time_order(const ExperimentConfig& c) {
  const Eigen::Index n = c.short_time.order_dimension;
  std::vector<RealSymmetricMatrix> ensemble;
  for (Eigen::Index l = 0; l < n; ++l) {
    RngStream rng = detail::stream(c, StreamPurpose::hamiltonian, 0, l, 1);
    ensemble.push_back(sample_goe(n, rng));
  }
  std::vector<double> times;
  const double unit = 2.0 / std::sqrt(static_cast<double>(n));
  const int p = c.short_time.order_points;
  for (int k = 0; k < p; ++k) {
    const double f = static_cast<double>(k) / (p - 1);
    times.push_back(unit * std::exp(std::log(c.short_time.order_lo) +
                                    f * (std::log(c.short_time.order_hi) - std::log(c.short_time.order_lo))));
  }
  return series_order_check(ensemble, times);
}

/// Crossover fits prescribed by the config on pooled <r~>.
inline std::vector<NamedFit> run_fits(const ExperimentConfig& c, const std::vector<double>& times,
                                      const std::vector<SpectralStatistics>& stats, std::vector<std::string>& warnings) {
  std::vector<NamedFit> out;
  if (!c.fit.enabled || c.observable == Observable::hamiltonian) return out;
  std::vector<FitPoint> data;
  const double n = static_cast<double>(c.hilbert_dimension());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double y = stats[k].r_tilde().mean();
    if (!std::isfinite(y)) continue;
    const double se = stats[k].r_tilde().std_error();
    const double x = c.fit.abscissa == FitAbscissa::nt ? n * times[k] : times[k];
    data.push_back({x, y, std::isfinite(se) && se > 0.0 ? 1.0 / (se * se) : 1.0});
  }
  auto attempt = [&](const std::string& name, FitForm form) {
    const CrossoverFitModel model{form, c.fit.abscissa};
    try {
      out.push_back({name, model, fit_crossover_iterative(data, model, std::nullopt, c.fit.passes)});
    } catch (const Error& e) {
      warnings.push_back("fit " + name + " failed: " + e.what());
    }
  };
  attempt("r_tilde", c.fit.form);
  if (c.fit.form == FitForm::scale_shift) attempt("r_tilde_inner_shift", FitForm::scale_inner_shift);
  return out;
}

namespace detail {

struct ChunkResult {
  std::vector<SpectralStatistics> stats;
  CrossoverMomentAccumulator moments;
  std::size_t done = 0;
  std::optional<std::string> failure;
  std::vector<std::string> warnings;
};

inline std::filesystem::path chunk_dir(const std::filesystem::path& out, std::size_t chunk) {
  return out / "partials" / ("chunk_" + std::to_string(chunk));
}

inline std::string chunk_marker(const std::string& hash, int chunk_size, std::size_t done) {
  return "config_hash = " + hash + "\nchunk_size = " + std::to_string(chunk_size) + "\nrealizations = " +
         std::to_string(done) + "\n";
}

inline void save_chunk(const std::filesystem::path& dir, const RunArtifact& shape, const ChunkResult& r, int chunk_size) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < r.stats.size(); ++k) {
    std::ostringstream o;
    io::write_statistics(o, r.stats[k]);
    io::write_text_atomic(dir / time_file_name(k), o.str());
  }
  io::write_text_atomic(dir / "done", chunk_marker(shape.config_hash, chunk_size, r.done));
}

inline std::optional<ChunkResult> load_chunk(const std::filesystem::path& dir, const std::string& hash, int chunk_size,
                                             std::size_t expected, std::size_t times) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir / "done")) return std::nullopt;
  std::ifstream in(dir / "done");
  std::stringstream ss;
  ss << in.rdbuf();
  if (ss.str() != chunk_marker(hash, chunk_size, expected)) return std::nullopt;
  ChunkResult r;
  r.done = expected;
  try {
    for (std::size_t k = 0; k < times; ++k) r.stats.push_back(io::read_statistics(io::read_document_file(dir / time_file_name(k))));
  } catch (const Error&) {
    return std::nullopt;
  }
  return r;
}

}  // namespace detail

/// Runs the whole experiment. Throws ConfigError for invalid configs and
/// ResourceRefusal when the estimate exceeds the budget; a realization that
/// fails twice ends the run with `complete = false` and the chunks finished so far.
inline RunArtifact run_experiment(const ExperimentConfig& config, const RunOptions& options = {}) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  const int workers = resolve_workers(config, options.workers);
  auto log = [&](const std::string& s) {
    if (options.log) options.log(s);
  };

  const CostEstimate cost = estimate_cost(config, workers);
  const double budget = options.budget_flops ? *options.budget_flops : config.run.budget_flops;
  if (budget > 0.0 && cost.flops > budget)
    throw ResourceRefusal("estimated cost exceeds budget of " + detail::format_double(budget) + " flops: " +
                          describe(cost));

  RunArtifact art;
  art.config = config;
  art.config_hash = config_hash(config);
  art.workers = workers;
  const bool short_time = config.kind == ExperimentKind::short_time_check;
  if (!short_time) {
    art.times = run_times(config);
    art.abscissae = run_abscissae(config);
  }
  const AnalysisOptions analysis = run_analysis(config);
  const std::size_t total = static_cast<std::size_t>(config.realizations);
  const std::size_t chunk_size = static_cast<std::size_t>(config.run.chunk_size);
  const std::size_t chunks = (total + chunk_size - 1) / chunk_size;
  const bool persist = options.out_dir.has_value() && !short_time;
  if (options.out_dir && !options.resume && std::filesystem::exists(*options.out_dir / "partials"))
    std::filesystem::remove_all(*options.out_dir / "partials");

  std::vector<std::optional<detail::ChunkResult>> results(chunks);
  std::size_t resumed = 0;
  if (persist && options.resume) {
    for (std::size_t ch = 0; ch < chunks; ++ch) {
      const std::size_t expected = std::min(total, (ch + 1) * chunk_size) - ch * chunk_size;
      results[ch] = detail::load_chunk(detail::chunk_dir(*options.out_dir, ch), art.config_hash, config.run.chunk_size,
                                       expected, art.times.size());
      if (results[ch]) ++resumed;
    }
    if (resumed) log("resumed " + std::to_string(resumed) + " of " + std::to_string(chunks) + " chunks");
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::size_t finished = resumed;

  auto run_chunk = [&](std::size_t ch) {
    detail::ChunkResult r;
    if (!short_time) r.stats.assign(art.times.size(), SpectralStatistics(analysis));
    const std::size_t lo = ch * chunk_size, hi = std::min(total, lo + chunk_size);
    for (std::size_t m = lo; m < hi && !stop; ++m) {
      bool ok = false;
      std::string last_error;
      for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
        try {
          if (options.before_realization) options.before_realization(m, attempt);
          if (short_time) {
            const CrossoverMatrices cm = short_time_ensemble(config, m);
            if (cm.warning) r.warnings.push_back("ensemble " + std::to_string(m) + ": " + *cm.warning);
            r.moments.add(cm);
          } else {
            std::vector<SpectralStatistics> one(art.times.size(), SpectralStatistics(analysis));
            run_realization(config, m, one);
            for (std::size_t k = 0; k < one.size(); ++k) r.stats[k].merge(one[k]);
          }
          ok = true;
        } catch (const std::exception& e) {
          last_error = e.what();
          if (attempt == 0) {
            std::lock_guard lock(mu);
            log("realization " + std::to_string(m) + " failed (" + last_error + "); retrying");
          }
        }
      }
      if (!ok) {
        r.failure = "realization " + std::to_string(m) + " failed twice: " + last_error;
        stop = true;
        break;
      }
      ++r.done;
    }
    if (!r.failure && r.done == hi - lo && persist)
      detail::save_chunk(detail::chunk_dir(*options.out_dir, ch), art, r, config.run.chunk_size);
    std::lock_guard lock(mu);
    results[ch] = std::move(r);
    ++finished;
    log("chunk " + std::to_string(ch + 1) + "/" + std::to_string(chunks) + " done (" + std::to_string(finished) +
        " total)");
  };

  auto worker = [&] {
    for (;;) {
      if (stop) return;
      const std::size_t ch = next++;
      if (ch >= chunks) return;
      if (results[ch]) continue;
      run_chunk(ch);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (!short_time) art.stats.assign(art.times.size(), SpectralStatistics(analysis));
  CrossoverMomentAccumulator moments;
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    if (!results[ch]) {
      art.complete = false;
      continue;
    }
    auto& r = *results[ch];
    if (r.failure) {
      art.complete = false;
      if (art.failure.empty()) art.failure = *r.failure;
    }
    art.realizations_done += r.done;
    for (std::size_t k = 0; k < r.stats.size(); ++k) art.stats[k].merge(r.stats[k]);
    moments.merge(r.moments);
    art.warnings.insert(art.warnings.end(), r.warnings.begin(), r.warnings.end());
  }

  if (short_time && moments.ensembles() >= 2) {
    ShortTimeOutcome st;
    st.moments = moments.report();
    st.order = short_time_order(config);
    art.short_time = std::move(st);
  } else if (short_time) {
    art.complete = false;
    if (art.failure.empty()) art.failure = "short-time check needs at least two completed ensembles";
  }
  if (!short_time && art.realizations_done > 0) art.fits = run_fits(config, art.times, art.stats, art.warnings);
  for (std::size_t k = 0; k < art.stats.size(); ++k) {
    if (art.stats[k].incomplete_truncations() > 0.0)
      art.warnings.push_back("time " + std::to_string(k) + ": truncation tolerance not reached in " +
                             detail::format_double(art.stats[k].incomplete_truncations()) + " realizations");
    if (art.stats[k].unfold_skipped() > 0.0)
      art.warnings.push_back("time " + std::to_string(k) + ": polynomial unfolding failed in " +
                             detail::format_double(art.stats[k].unfold_skipped()) +
                             " realizations; spacing and number variance exclude them");
  }

  art.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (options.out_dir) write_artifact(*options.out_dir, art);
  return art;
}

}  // namespace rmtmix::runner
