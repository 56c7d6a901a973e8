// rmtmix command line: run experiments, list presets, estimate cost, emit plot
// tables and run the short-time check.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 resource refusal,
// 1 anything else.

#include <CLI11.hpp>

#include <iostream>

#include "rmtmix/rmtmix.hpp"

namespace fs = std::filesystem;
using namespace rmtmix;
using namespace rmtmix::runner;

namespace {

ExperimentConfig resolve_config(const std::string& file, const std::string& preset_name) {
  if (!file.empty() && !preset_name.empty()) throw ConfigError("give either a config file or --preset, not both");
  if (!preset_name.empty()) return preset(preset_name);
  if (file.empty()) throw ConfigError("a config file or --preset is required");
  return load_config(file);
}

void print_report(const RunArtifact& a, const fs::path& out) {
  std::cout << "kind            " << to_string(a.config.kind) << "\n"
            << "config hash     " << a.config_hash << "\n"
            << "realizations    " << a.realizations_done << " / " << a.config.realizations
            << (a.complete ? "" : "  (INCOMPLETE)") << "\n"
            << "wall clock      " << io::num(a.wall_seconds) << " s on " << a.workers << " worker(s)\n";
  if (!a.failure.empty()) std::cout << "failure         " << a.failure << "\n";
  if (!a.stats.empty()) {
    std::cout << "\n  index\t" << (a.config.time.in_units_of_nt ? "Nt" : "t") << "\t<r~>\tstd_error\tmean_kept\n";
    for (std::size_t k = 0; k < a.stats.size(); ++k)
      std::cout << "  " << k << '\t' << io::num(a.abscissae[k]) << '\t' << io::num(a.stats[k].r_tilde().mean()) << '\t'
                << io::num(a.stats[k].r_tilde().std_error()) << '\t' << io::num(a.stats[k].mean_kept()) << "\n";
  }
  for (const auto& f : a.fits) {
    std::cout << "\nfit " << f.name << " (" << to_string(f.model.form) << " on " << to_string(f.model.abscissa)
              << "): ";
    for (Eigen::Index j = 0; j < f.result.parameters.size(); ++j)
      std::cout << static_cast<char>('a' + j) << " = " << io::num(f.result.parameters(j)) << " +- "
                << io::num(f.result.std_errors(j)) << "  ";
    std::cout << (f.result.converged ? "" : "(not converged)") << "\n";
  }
  if (a.short_time) {
    const auto& m = a.short_time->moments;
    std::cout << "\nB/D second moments over " << m.ensembles << " ensembles, N = " << m.dimension << "\n"
              << "  quantity\tvalue\tstd_error\ttarget\tz\n";
    auto row = [](const char* name, const CrossoverMomentAccumulator::Moment& v) {
      std::cout << "  " << name << '\t' << io::num(v.value) << '\t' << io::num(v.std_error) << '\t'
                << io::num(v.target) << '\t' << io::num(v.z()) << "\n";
    };
    row("B_mean", m.b_mean);
    row("B_diag_var", m.b_diag_var);
    row("B_offdiag_var", m.b_offdiag_var);
    row("D_offdiag_var", m.d_offdiag_var);
    std::cout << "series-vs-exact log-log slope " << io::num(a.short_time->order.slope) << "\n";
  }
  for (const auto& w : a.warnings) std::cout << "warning: " << w << "\n";
  if (!out.empty()) std::cout << "\nartifact written to " << out.string() << "\n";
}

fs::path default_out(const ExperimentConfig& c) {
  return fs::path("runs") / (std::string(to_string(c.kind)) + "-" + config_hash(c).substr(0, 12));
}

RunOptions make_options(const std::string& out, int workers, bool resume, double budget, bool quiet) {
  RunOptions o;
  if (!out.empty()) o.out_dir = fs::path(out);
  if (workers > 0) o.workers = workers;
  if (budget > 0.0) o.budget_flops = budget;
  o.resume = resume;
  if (!quiet) o.log = [](const std::string& s) { std::cerr << "[rmtmix] " << s << std::endl; };
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral statistics of incoherently mixed quantum states"};
  app.set_version_flag("--version", std::string(RMTMIX_VERSION));
  app.require_subcommand(1);

  std::string config_file, preset_name, out_dir;
  int workers = 0;
  bool resume = false, quiet = false;
  double budget = 0.0;

  auto* run = app.add_subcommand("run", "run an experiment and write its artifact directory");
  run->add_option("config", config_file, "INI config file");
  run->add_option("--preset", preset_name, "named preset instead of a config file");
  run->add_option("--out", out_dir, "artifact directory (default runs/<kind>-<hash>)");
  run->add_option("--workers", workers, "worker threads (overrides RMTMIX_WORKERS and the config)");
  run->add_flag("--resume", resume, "reuse finished chunks from an interrupted run in --out");
  run->add_option("--budget-flops", budget, "refuse to start when the flop estimate exceeds this");
  run->add_flag("--quiet", quiet, "no progress on stderr");

  auto* presets_cmd = app.add_subcommand("presets", "list or show named presets");
  presets_cmd->require_subcommand(1);
  auto* presets_list = presets_cmd->add_subcommand("list", "list preset names");
  std::string show_name;
  auto* presets_show = presets_cmd->add_subcommand("show", "print a preset as a config file");
  presets_show->add_option("name", show_name)->required();

  std::string artifact_dir, figure;
  auto* emit = app.add_subcommand("emit", "write plot tables from an artifact");
  emit->add_option("artifact", artifact_dir, "artifact directory")->required();
  emit->add_option("--figure", figure, "figure id or 'all'")->required();
  std::string emit_out;
  emit->add_option("--out", emit_out, "output directory (default <artifact>/plots)");

  auto* estimate = app.add_subcommand("estimate", "print the resource estimate of a config");
  estimate->add_option("config", config_file, "INI config file");
  estimate->add_option("--preset", preset_name, "named preset instead of a config file");
  estimate->add_option("--workers", workers, "worker threads assumed");

  int st_n = 512, st_ensembles = 200;
  std::uint64_t st_seed = 1;
  auto* st = app.add_subcommand("short-time-check", "B/D second moments and series order report");
  st->add_option("--n", st_n, "dimension")->required();
  st->add_option("--ensembles", st_ensembles, "number of independent ensembles");
  st->add_option("--seed", st_seed, "seed");
  st->add_option("--out", out_dir, "artifact directory (optional)");
  st->add_option("--workers", workers, "worker threads");
  st->add_flag("--quiet", quiet, "no progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const ExperimentConfig c = resolve_config(config_file, preset_name);
      const fs::path out = out_dir.empty() ? default_out(c) : fs::path(out_dir);
      const RunArtifact a = run_experiment(c, make_options(out.string(), workers, resume, budget, quiet));
      print_report(a, out);
      return a.complete ? 0 : 1;
    }
    if (*presets_list) {
      for (const auto& p : presets()) {
        const auto& c = p.config;
        std::cout << p.name << "\t" << p.description << "\tN*M = " << c.hilbert_dimension() * c.realizations << "\n";
      }
      return 0;
    }
    if (*presets_show) {
      std::cout << canonical_text(preset(show_name));
      return 0;
    }
    if (*emit) {
      const RunArtifact a = read_artifact(artifact_dir);
      const fs::path out = emit_out.empty() ? fs::path(artifact_dir) / "plots" : fs::path(emit_out);
      std::vector<std::string> ids;
      if (figure == "all") ids = figure_ids();
      else ids.push_back(figure);
      int missing = 0;
      for (const auto& id : ids) {
        try {
          std::cout << emit_plot_data(a, id, out).string() << "\n";
        } catch (const MissingStatistics& e) {
          if (figure != "all") throw;
          std::cerr << "skipped " << id << ": " << e.what() << "\n";
          ++missing;
        }
      }
      return missing == static_cast<int>(ids.size()) ? 1 : 0;
    }
    if (*estimate) {
      const ExperimentConfig c = resolve_config(config_file, preset_name);
      validate(c);
      const CostEstimate e = estimate_cost(c, resolve_workers(c, workers > 0 ? std::optional<int>(workers) : std::nullopt));
      std::cout << "flops\t" << io::num(e.flops) << "\nmemory_bytes\t" << io::num(e.memory_bytes) << "\nseconds\t"
                << io::num(e.seconds) << "\nworkers\t" << e.workers << "\n"
                << describe(e) << "\n";
      return 0;
    }
    if (*st) {
      ExperimentConfig c = preset("short-time-check");
      c.dimension = st_n;
      c.realizations = st_ensembles;
      c.seed = st_seed;
      const RunArtifact a = run_experiment(c, make_options(out_dir, workers, false, 0.0, quiet));
      print_report(a, out_dir.empty() ? fs::path() : fs::path(out_dir));
      return a.complete ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const ResourceRefusal& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
