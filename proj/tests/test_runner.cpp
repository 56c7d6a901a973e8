#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "rmtmix/runner/artifact.hpp"
#include "rmtmix/runner/config.hpp"
#include "rmtmix/runner/cost.hpp"
#include "rmtmix/runner/experiment.hpp"
#include "rmtmix/runner/plots.hpp"

using namespace rmtmix;
using namespace rmtmix::runner;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_goe(int n = 16, int m = 12) {
  ExperimentConfig c = default_config(ExperimentKind::goe_mix);
  c.dimension = n;
  c.realizations = m;
  c.time.count = 4;
  c.run.chunk_size = 3;
  c.analysis.number_variance_lengths = {0.5, 1.0};
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rmtmix_test_" + name);
  fs::remove_all(p);
  return p;
}

void expect_same(const std::vector<SpectralStatistics>& a, const std::vector<SpectralStatistics>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_NEAR(a[k].r_tilde().mean(), b[k].r_tilde().mean(), 1e-12) << k;
    EXPECT_NEAR(a[k].r_tilde().std_error(), b[k].r_tilde().std_error(), 1e-12) << k;
    EXPECT_EQ(a[k].spacing().counts(), b[k].spacing().counts()) << k;
    EXPECT_EQ(a[k].density().counts(), b[k].density().counts()) << k;
    EXPECT_EQ(a[k].realizations(), b[k].realizations()) << k;
    const auto& va = a[k].number_variance().values();
    const auto& vb = b[k].number_variance().values();
    ASSERT_EQ(va.size(), vb.size());
    for (std::size_t i = 0; i < va.size(); ++i) EXPECT_NEAR(va[i], vb[i], 1e-12) << k << "," << i;
  }
}

RunOptions quiet(int workers = 1) {
  RunOptions o;
  o.workers = workers;
  return o;
}

}  // namespace

TEST(Config, MinimalTextUsesKindDefaults) {
  const auto c = parse_config_text("[experiment]\nkind = spin-hf\nrealizations = 3\n[system]\nchain_length = 8\ndisorder = 0.5\n");
  EXPECT_EQ(c.kind, ExperimentKind::spin_hf);
  EXPECT_EQ(c.hilbert_dimension(), 70);
  EXPECT_EQ(c.effective_n_up(), 4);
  EXPECT_EQ(c.initial_state, InitialStateKind::random_real);
  EXPECT_FALSE(c.time.in_units_of_nt);
  EXPECT_EQ(c.time.count, 17);
  EXPECT_EQ(c.fit.form, FitForm::scale_shift_amplitude);
  EXPECT_EQ(c.seed, 1u);
}

TEST(Config, CanonicalTextRoundTrips) {
  for (const auto& p : presets()) {
    const std::string text = canonical_text(p.config);
    const ExperimentConfig back = parse_config_text(text);
    EXPECT_EQ(canonical_text(back), text) << p.name;
    EXPECT_EQ(config_hash(back), config_hash(p.config)) << p.name;
  }
  ExperimentConfig c = small_goe();
  c.analysis.number_variance_lengths = {0.1, 1.0 / 3.0, 7.25};
  c.time.start = 0.1 + 0.2;
  EXPECT_EQ(canonical_text(parse_config_text(canonical_text(c))), canonical_text(c));
}

TEST(Config, HashIgnoresOrderingAndRunSection) {
  const std::string a =
      "[experiment]\nkind = goe-mix\nrealizations = 4\nseed = 9\n[system]\ndimension = 32\n[time]\ncount = 5\n";
  const std::string b =
      "[time]\ncount = 5\n[system]\ndimension = 32\n[experiment]\nseed = 9\nrealizations = 4\nkind = goe-mix\n"
      "[run]\nworkers = 3\nchunk_size = 2\n";
  EXPECT_EQ(config_hash(parse_config_text(a)), config_hash(parse_config_text(b)));
  EXPECT_EQ(config_hash(parse_config_text(a)).size(), 40u);
  ExperimentConfig c = parse_config_text(a);
  c.seed = 10;
  EXPECT_NE(config_hash(c), config_hash(parse_config_text(a)));
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config_text("[experiment]\nkind = goe-mix\nrealizations = 2\nbogus = 1\n[system]\ndimension = 8\n"),
               ConfigError);
  EXPECT_THROW(parse_config_text("[experiment]\nkind = goe-mix\n[system]\ndimension = 8\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[experiment]\nkind = goe-mixx\nrealizations = 2\n[system]\ndimension = 8\n"),
               ConfigError);
  EXPECT_THROW(parse_config_text("[experiment]\nkind = goe-mix\nrealizations = two\n[system]\ndimension = 8\n"),
               ConfigError);
  EXPECT_THROW(parse_config_text("[nonsense]\nx = 1\n[experiment]\nkind = goe-mix\nrealizations = 2\n"), ConfigError);

  ExperimentConfig c = small_goe();
  c.ensemble_size = 8;
  EXPECT_THROW(validate(c), ConfigError);
  c.allow_size_override = true;
  EXPECT_NO_THROW(validate(c));
  c = small_goe();
  c.time.start = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c.time.kind = TimeGridKind::linear;
  EXPECT_NO_THROW(validate(c));
  c = small_goe();
  c.basis_index = 16;
  EXPECT_THROW(validate(c), ConfigError);
  c = default_config(ExperimentKind::spin_oe);
  c.chain_length = 10;
  c.realizations = 1;
  EXPECT_THROW(validate(c), ConfigError);  // no disorder
  EXPECT_THROW(load_config("/nonexistent/rmtmix.ini"), ConfigError);
}

TEST(Presets, AllValidateAndAreDistinct) {
  std::set<std::string> names, hashes;
  for (const auto& p : presets()) {
    EXPECT_NO_THROW(validate(p.config)) << p.name;
    names.insert(p.name);
    hashes.insert(config_hash(p.config));
  }
  EXPECT_EQ(names.size(), presets().size());
  EXPECT_EQ(hashes.size(), presets().size());
  for (const char* n : {"goe-mix-desk", "goe-mix-full", "gue-mix-desk", "spin-hf-desk", "spin-oe-desk",
                        "short-time-check"})
    EXPECT_TRUE(names.count(n)) << n;

  const auto g = preset("goe-mix-desk");
  EXPECT_EQ(g.dimension, 256);
  EXPECT_GE(static_cast<long>(g.dimension) * g.realizations, 100000);
  EXPECT_EQ(preset("goe-mix-full").realizations, 488);
  EXPECT_EQ(preset("spin-hf-full").hilbert_dimension(), 924);
  EXPECT_THROW(preset("no-such-preset"), ConfigError);
}

TEST(Workers, Resolution) {
  ExperimentConfig c = small_goe();
  c.run.workers = 5;
  unsetenv("RMTMIX_WORKERS");
  EXPECT_EQ(resolve_workers(c, 2), 2);
  EXPECT_EQ(resolve_workers(c, std::nullopt), 5);
  setenv("RMTMIX_WORKERS", "3", 1);
  EXPECT_EQ(resolve_workers(c, std::nullopt), 3);
  EXPECT_EQ(resolve_workers(c, 7), 7);
  setenv("RMTMIX_WORKERS", "zero", 1);
  EXPECT_THROW(resolve_workers(c, std::nullopt), ConfigError);
  unsetenv("RMTMIX_WORKERS");
  c.run.workers = 0;
  EXPECT_GE(resolve_workers(c, std::nullopt), 1);
}

TEST(Cost, ScalingAndReferencePoint) {
  ExperimentConfig c = small_goe(2, 1);
  const auto tiny = estimate_cost(c);
  EXPECT_GT(tiny.flops, 0.0);
  EXPECT_GT(tiny.memory_bytes, 0.0);

  c = small_goe(256, 100);
  c.time.count = 20;
  const double ref = estimate_cost(c).flops;
  EXPECT_GT(ref, 2e11 / 10);
  EXPECT_LT(ref, 2e11 * 10);
  c.dimension = 512;
  const double ratio = estimate_cost(c).flops / ref;
  // Lanczos keeps the per-member setup below the propagation cost here.
  EXPECT_GT(ratio, 8.0);
  EXPECT_LE(ratio, 16.5);
  c.propagator = PropagatorKind::eigen;
  const double dense = estimate_cost(c).flops;
  c.dimension = 256;
  EXPECT_GT(dense / estimate_cost(c).flops, 12.0);
  EXPECT_LE(dense / estimate_cost(c).flops, 16.5);
  c.dimension = 512;

  const auto two = estimate_cost(c, 2);
  EXPECT_NEAR(two.seconds * 2, estimate_cost(c, 1).seconds, 1e-9 * two.seconds);
  EXPECT_NE(describe(two).find("2 worker"), std::string::npos);
}

TEST(Run, SmallGoeMixProducesConsistentStatistics) {
  const ExperimentConfig c = small_goe(24, 6);
  const RunArtifact a = run_experiment(c, quiet());
  EXPECT_TRUE(a.complete);
  EXPECT_EQ(a.realizations_done, 6u);
  ASSERT_EQ(a.stats.size(), 4u);
  ASSERT_EQ(a.times.size(), 4u);
  EXPECT_DOUBLE_EQ(a.times.front() * 24, 0.01);
  EXPECT_DOUBLE_EQ(a.abscissae.back(), 10.0);
  for (const auto& s : a.stats) {
    EXPECT_EQ(s.realizations(), 6.0);
    EXPECT_LE(s.max_trace_error(), 1e-10);
    EXPECT_GE(s.min_eigenvalue(), -1e-10);
    EXPECT_GT(s.r_tilde().mean(), 0.3);
    EXPECT_LT(s.r_tilde().mean(), 0.8);
  }
  EXPECT_GT(a.stats.front().mean_purity(), a.stats.back().mean_purity());
  EXPECT_EQ(a.config_hash, config_hash(c));
}

TEST(Run, DeterministicAcrossWorkersAndChunking) {
  const ExperimentConfig c = small_goe(16, 12);
  const RunArtifact one = run_experiment(c, quiet(1));
  const RunArtifact three = run_experiment(c, quiet(3));
  EXPECT_EQ(three.workers, 3);
  expect_same(one.stats, three.stats);
  ExperimentConfig big = c;
  big.run.chunk_size = 5;
  expect_same(one.stats, run_experiment(big, quiet(2)).stats);
  EXPECT_EQ(config_hash(big), config_hash(c));

  ExperimentConfig other = c;
  other.seed = 2;
  EXPECT_NE(run_experiment(other, quiet()).stats[1].r_tilde().mean(), one.stats[1].r_tilde().mean());
}

TEST(Run, RetriesAFailedRealizationOnce) {
  const ExperimentConfig c = small_goe(16, 6);
  RunOptions o = quiet();
  int calls = 0;
  o.before_realization = [&](std::size_t m, int attempt) {
    if (m == 4 && attempt == 0) {
      ++calls;
      throw std::runtime_error("injected");
    }
  };
  std::vector<std::string> logs;
  o.log = [&](const std::string& s) { logs.push_back(s); };
  const RunArtifact a = run_experiment(c, o);
  EXPECT_EQ(calls, 1);
  EXPECT_TRUE(a.complete);
  expect_same(a.stats, run_experiment(c, quiet()).stats);
  EXPECT_TRUE(std::any_of(logs.begin(), logs.end(), [](const auto& s) { return s.find("retrying") != s.npos; }));
}

TEST(Run, DoubleFailureStopsAndResumeCompletes) {
  const ExperimentConfig c = small_goe(16, 12);
  const fs::path out = scratch("resume");
  RunOptions o = quiet();
  o.out_dir = out;
  o.before_realization = [](std::size_t m, int) {
    if (m == 7) throw std::runtime_error("injected");
  };
  const RunArtifact broken = run_experiment(c, o);
  EXPECT_FALSE(broken.complete);
  EXPECT_NE(broken.failure.find("realization 7"), std::string::npos);
  EXPECT_LT(broken.realizations_done, 12u);
  EXPECT_TRUE(fs::exists(out / "partials" / "chunk_0" / "done"));
  EXPECT_TRUE(fs::exists(out / "partials" / "chunk_1" / "done"));
  EXPECT_FALSE(fs::exists(out / "partials" / "chunk_2" / "done"));
  EXPECT_FALSE(read_artifact(out).complete);

  RunOptions r = quiet();
  r.out_dir = out;
  r.resume = true;
  std::vector<std::size_t> ran;
  r.before_realization = [&](std::size_t m, int) { ran.push_back(m); };
  const RunArtifact resumed = run_experiment(c, r);
  EXPECT_TRUE(resumed.complete);
  EXPECT_EQ(resumed.realizations_done, 12u);
  EXPECT_EQ(ran, (std::vector<std::size_t>{6, 7, 8, 9, 10, 11}));
  expect_same(resumed.stats, run_experiment(c, quiet()).stats);

  // A changed config must not reuse the partials.
  ExperimentConfig changed = c;
  changed.seed = 99;
  ran.clear();
  run_experiment(changed, r);
  EXPECT_EQ(ran.size(), 12u);
  fs::remove_all(out);
}

TEST(Run, BudgetRefusal) {
  const ExperimentConfig c = small_goe(64, 10);
  RunOptions o = quiet();
  o.budget_flops = 1.0;
  EXPECT_THROW(run_experiment(c, o), ResourceRefusal);
  ExperimentConfig b = c;
  b.run.budget_flops = 10.0;
  EXPECT_THROW(run_experiment(b, quiet()), ResourceRefusal);
  o.budget_flops = 1e30;
  EXPECT_NO_THROW(run_experiment(small_goe(8, 2), o));
}

TEST(Run, InvalidConfigThrowsBeforeWork) {
  ExperimentConfig c = small_goe();
  c.dimension = 1;
  bool called = false;
  RunOptions o = quiet();
  o.before_realization = [&](std::size_t, int) { called = true; };
  EXPECT_THROW(run_experiment(c, o), ConfigError);
  EXPECT_FALSE(called);
}

TEST(Run, OtherKinds) {
  {
    ExperimentConfig c = default_config(ExperimentKind::gue_mix);
    c.dimension = 16;
    c.realizations = 3;
    c.time.count = 2;
    const auto a = run_experiment(c, quiet());
    EXPECT_TRUE(a.complete);
    EXPECT_TRUE(a.fits.empty());
  }
  {
    ExperimentConfig c = default_config(ExperimentKind::crossover_hamiltonian);
    c.dimension = 16;
    c.alpha = 0.3;
    c.realizations = 3;
    c.time.count = 2;
    EXPECT_TRUE(run_experiment(c, quiet()).complete);
  }
  {
    ExperimentConfig c = default_config(ExperimentKind::spin_hf);
    c.chain_length = 6;
    c.disorder = 0.5;
    c.realizations = 2;
    c.time.count = 3;
    const auto a = run_experiment(c, quiet());
    EXPECT_TRUE(a.complete);
    EXPECT_DOUBLE_EQ(a.times.back(), 100.0);
    EXPECT_LE(a.stats.back().max_trace_error(), 1e-10);
  }
  {
    ExperimentConfig c = default_config(ExperimentKind::spin_oe);
    c.chain_length = 12;
    c.disorder = 0.1;
    c.realizations = 2;
    c.time.count = 3;
    EXPECT_TRUE(run_experiment(c, quiet()).complete);
  }
  {
    ExperimentConfig c = small_goe(32, 4);
    c.observable = Observable::hamiltonian;
    const auto a = run_experiment(c, quiet());
    ASSERT_EQ(a.stats.size(), 1u);
    EXPECT_EQ(a.stats[0].mean_kept(), 32.0);
    EXPECT_TRUE(a.fits.empty());
  }
  {
    ExperimentConfig c = small_goe(16, 2);
    c.per_time_refresh = true;
    const auto a = run_experiment(c, quiet());
    EXPECT_NE(a.stats[1].r_tilde().mean(), run_experiment(small_goe(16, 2), quiet()).stats[1].r_tilde().mean());
  }
}

TEST(Run, ShortTimeCheckSmall) {
  ExperimentConfig c = preset("short-time-check");
  c.dimension = 24;
  c.realizations = 6;
  c.run.chunk_size = 2;
  const fs::path out = scratch("short_time");
  RunOptions o = quiet();
  o.out_dir = out;
  const auto a = run_experiment(c, o);
  ASSERT_TRUE(a.short_time.has_value());
  EXPECT_EQ(a.short_time->moments.ensembles, 6u);
  EXPECT_EQ(a.short_time->moments.dimension, 24);
  EXPECT_FALSE(fs::exists(out / "partials"));
  const auto back = read_artifact(out);
  ASSERT_TRUE(back.short_time.has_value());
  EXPECT_NEAR(back.short_time->moments.b_diag_var.value, a.short_time->moments.b_diag_var.value, 1e-12);
  EXPECT_NEAR(back.short_time->order.slope, a.short_time->order.slope, 1e-12);
  fs::remove_all(out);

  c.realizations = 1;
  EXPECT_FALSE(run_experiment(c, quiet()).complete);
}

TEST(Artifact, WriteReadRoundTrip) {
  const ExperimentConfig c = small_goe(24, 8);
  const fs::path out = scratch("artifact");
  RunOptions o = quiet();
  o.out_dir = out;
  const RunArtifact a = run_experiment(c, o);
  const RunArtifact b = read_artifact(out);
  EXPECT_EQ(b.config_hash, a.config_hash);
  EXPECT_EQ(canonical_text(b.config, false), canonical_text(c, false));
  EXPECT_EQ(b.realizations_done, 8u);
  EXPECT_TRUE(b.complete);
  ASSERT_EQ(b.times.size(), a.times.size());
  for (std::size_t k = 0; k < a.times.size(); ++k) EXPECT_EQ(b.times[k], a.times[k]);
  expect_same(a.stats, b.stats);
  for (std::size_t k = 0; k < a.stats.size(); ++k) {
    EXPECT_EQ(b.stats[k].mean_purity(), a.stats[k].mean_purity());
    EXPECT_EQ(b.stats[k].density_sqrt().counts(), a.stats[k].density_sqrt().counts());
  }
  ASSERT_EQ(b.fits.size(), a.fits.size());
  for (std::size_t i = 0; i < a.fits.size(); ++i) {
    EXPECT_EQ(b.fits[i].name, a.fits[i].name);
    EXPECT_EQ(b.fits[i].result.parameters, a.fits[i].result.parameters);
  }

  // Editing the snapshot breaks the recorded hash.
  std::string text;
  {
    std::ifstream in(out / "config.snapshot");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  const auto pos = text.find("seed = 1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 8, "seed = 2");
  io::write_text_atomic(out / "config.snapshot", text);
  EXPECT_THROW(read_artifact(out), ArtifactError);
  EXPECT_THROW(read_artifact(out / "missing"), ArtifactError);
  fs::remove_all(out);
}

TEST(Plots, EveryFigureFromAGoeArtifact) {
  const RunArtifact a = run_experiment(small_goe(32, 6), quiet());
  for (const auto& id : figure_ids()) {
    const std::string t = plot_table(a, id);
    EXPECT_NE(t.find("# figure: " + id), std::string::npos) << id;
    EXPECT_NE(t.find("#! columns"), std::string::npos) << id;
  }
  EXPECT_NE(plot_table(a, "spacing").find("surmise_goe\tsurmise_gue"), std::string::npos);
  EXPECT_NE(plot_table(a, "density").find("marchenko_pastur"), std::string::npos);
  EXPECT_NE(plot_table(a, "density-sqrt").find("quarter_circle"), std::string::npos);
  if (!a.fits.empty()) EXPECT_NE(plot_table(a, "r-tilde-nt").find("# fit: scale-shift on Nt"), std::string::npos);

  const fs::path out = scratch("plots");
  const fs::path p = emit_plot_data(a, "number-variance", out);
  EXPECT_EQ(p.filename(), "number-variance.tsv");
  EXPECT_TRUE(fs::exists(p));
  fs::remove_all(out);
}

TEST(Plots, MissingAndUnknown) {
  RunArtifact empty;
  empty.config = small_goe();
  for (const auto& id : figure_ids()) EXPECT_THROW(plot_table(empty, id), MissingStatistics) << id;
  try {
    plot_table(empty, "spacing");
    FAIL();
  } catch (const MissingStatistics& e) {
    EXPECT_NE(std::string(e.what()).find("spacing histogram"), std::string::npos);
  }
  EXPECT_THROW(plot_table(empty, "no-such-panel"), ConfigError);
}

#ifdef RMTMIX_CLI_PATH
namespace {

int cli(const std::string& args) {
  const int r = std::system((std::string(RMTMIX_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(r) ? WEXITSTATUS(r) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  EXPECT_EQ(cli("presets list"), 0);
  EXPECT_EQ(cli("presets show goe-mix-desk"), 0);
  EXPECT_EQ(cli("presets show nope"), 2);
  EXPECT_EQ(cli("--bogus-flag"), 2);
  EXPECT_EQ(cli("estimate --preset spin-hf-desk"), 0);

  io::write_text_atomic(dir / "bad.ini", "[experiment]\nkind = goe-mix\n");
  EXPECT_EQ(cli("run " + (dir / "bad.ini").string() + " --quiet --out " + (dir / "bad").string()), 2);
  io::write_text_atomic(dir / "ok.ini",
                        "[experiment]\nkind = goe-mix\nrealizations = 2\n[system]\ndimension = 12\n[time]\ncount = 3\n");
  EXPECT_EQ(cli("run " + (dir / "ok.ini").string() + " --quiet --budget-flops 10 --out " + (dir / "ok").string()), 3);
  EXPECT_EQ(cli("run " + (dir / "ok.ini").string() + " --quiet --workers 2 --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "summary.txt"));
  EXPECT_EQ(cli("emit " + (dir / "ok").string() + " --figure all"), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "plots" / "r-tilde-nt.tsv"));
  EXPECT_EQ(cli("emit " + (dir / "ok").string() + " --figure no-such-panel"), 2);
  EXPECT_EQ(cli("short-time-check --n 12 --ensembles 3 --quiet"), 0);
  fs::remove_all(dir);
}
#endif
