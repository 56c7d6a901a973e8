#include <gtest/gtest.h>

#include "rmtmix/fitting.hpp"
#include "rmtmix/rng.hpp"

using namespace rmtmix;

namespace {

std::vector<FitPoint> synthetic(const CrossoverFitModel& m, const RealVector& p, double noise, std::uint64_t seed) {
  RngStream r(seed, make_stream_id(StreamPurpose::test, 4, 0));
  std::vector<FitPoint> d;
  for (int k = 0; k < 25; ++k) {
    const double x = std::pow(10.0, -2.0 + 3.0 * k / 24.0);
    const double w = noise > 0.0 ? 1.0 / (noise * noise) : 1.0;
    d.push_back({x, m(x, p) + noise * standard_normal(r), w});
  }
  return d;
}

RealVector params(std::initializer_list<double> v) {
  RealVector p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p(i++) = x;
  return p;
}

}  // namespace

TEST(Fit, RecoversNoisyScaleShift) {
  const CrossoverFitModel m{FitForm::scale_shift, FitAbscissa::nt};
  const auto d = synthetic(m, params({0.3, -0.005}), 1e-4, 1);
  const FitResult f = fit_crossover(d, m, default_fit_init(d, m));
  ASSERT_TRUE(f.converged);
  EXPECT_NEAR(f.parameters(0), 0.3, 3 * f.std_errors(0));
  EXPECT_NEAR(f.parameters(1), -0.005, 3 * f.std_errors(1));
  EXPECT_GT(f.std_errors(0), 0.0);
  EXPECT_EQ(f.points, 25u);
}

TEST(Fit, ExactDataFromTrueInit) {
  const CrossoverFitModel m{FitForm::scale_shift, FitAbscissa::nt};
  const RealVector p = params({0.2832, -4.62e-3});
  const auto d = synthetic(m, p, 0.0, 2);
  const FitResult f = fit_crossover(d, m, p);
  EXPECT_TRUE(f.converged);
  EXPECT_LE(f.iterations, 3);
  EXPECT_LE(f.rss, 1e-20);
}

TEST(Fit, AmplitudeAndInnerShiftForms) {
  const CrossoverFitModel amp{FitForm::scale_shift_amplitude, FitAbscissa::t};
  const auto d = synthetic(amp, params({0.49, 0.02, 0.95}), 1e-4, 3);
  RealVector init = default_fit_init(d, amp);
  ASSERT_EQ(init.size(), 3);
  EXPECT_EQ(init(2), 1.0);
  const FitResult f = fit_crossover(d, amp, init);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.parameters(0), 0.49, 3 * f.std_errors(0));
  EXPECT_NEAR(f.parameters(2), 0.95, 3 * f.std_errors(2));

  const CrossoverFitModel inner{FitForm::scale_inner_shift, FitAbscissa::nt};
  const auto e = synthetic(inner, params({0.3, 0.05}), 1e-4, 4);
  const FitResult g = fit_crossover(e, inner, default_fit_init(e, inner));
  EXPECT_NEAR(g.parameters(0), 0.3, 3 * g.std_errors(0));
  EXPECT_NEAR(g.parameters(1), 0.05, 3 * g.std_errors(1));
}

TEST(Fit, ResidualNonIncreasing) {
  const CrossoverFitModel m{FitForm::scale_shift, FitAbscissa::nt};
  const auto d = synthetic(m, params({0.3, -0.005}), 1e-3, 5);
  const RealVector init = params({0.05, 0.02});
  const double rss0 = detail::fit_residuals(d, m, init).squaredNorm();
  double prev = rss0;
  for (int it = 1; it <= 10; ++it) {
    FitOptions o;
    o.max_iterations = it;
    const FitResult f = fit_crossover(d, m, init, o);
    EXPECT_LE(f.rss, prev + 1e-18) << it;
    prev = f.rss;
  }
  EXPECT_LT(prev, rss0);
}

TEST(Fit, NonConvergenceReportsBestSoFar) {
  const CrossoverFitModel m{FitForm::scale_shift, FitAbscissa::nt};
  const auto d = synthetic(m, params({0.3, -0.005}), 1e-3, 6);
  FitOptions o;
  o.max_iterations = 1;
  o.gradient_tolerance = 1e-300;
  const FitResult f = fit_crossover(d, m, params({0.01, 0.05}), o);
  EXPECT_FALSE(f.converged);
  EXPECT_EQ(f.parameters.size(), 2);
}

TEST(Fit, Errors) {
  const CrossoverFitModel m{FitForm::scale_shift, FitAbscissa::nt};
  const auto d = synthetic(m, params({0.3, 0.0}), 0.0, 7);
  EXPECT_THROW(fit_crossover(d, m, params({0.3})), ConfigError);
  EXPECT_THROW(fit_crossover({d.begin(), d.begin() + 3}, m, params({0.3, 0.0})), PreconditionError);
  auto bad = d;
  bad[0].x = -1.0;
  EXPECT_THROW(fit_crossover(bad, m, params({0.3, 0.0})), DomainError);
  // All points deep in the saturated region: the scale is not identifiable.
  std::vector<FitPoint> flat;
  for (int k = 0; k < 6; ++k) flat.push_back({100.0 + k, 0.6, 1.0});
  EXPECT_THROW(fit_crossover(flat, m, params({1.0, 0.0})), RankDeficiencyError);
}

TEST(Fit, BitwiseReproducible) {
  const CrossoverFitModel m{FitForm::scale_shift, FitAbscissa::nt};
  const auto d = synthetic(m, params({0.3, -0.005}), 1e-3, 8);
  const FitResult a = fit_crossover(d, m, default_fit_init(d, m));
  const FitResult b = fit_crossover(d, m, default_fit_init(d, m));
  EXPECT_EQ(a.parameters, b.parameters);
  EXPECT_EQ(a.std_errors, b.std_errors);
  EXPECT_EQ(a.rss, b.rss);
}

TEST(Fit, JacobianStepRefinement) {
  const CrossoverFitModel m{FitForm::scale_shift_amplitude, FitAbscissa::t};
  const auto d = synthetic(m, params({0.4, 0.01, 0.9}), 1e-3, 9);
  const RealVector p = params({0.37, 0.012, 0.93});
  const RealMatrix j = fit_jacobian(d, m, p);
  const RealMatrix fine = fit_jacobian(d, m, p, 0.1);
  EXPECT_LT((j - fine).norm() / fine.norm(), 1e-4);
}

TEST(Fit, ModelUsesCrossoverCurve) {
  const CrossoverFitModel m{FitForm::scale_shift, FitAbscissa::nt};
  EXPECT_DOUBLE_EQ(m(2.0, params({0.25, 0.01})), r_tilde_crossover(0.5) + 0.01);
  EXPECT_DOUBLE_EQ(m(10.0, params({0.25, 0.0})), r_tilde_crossover(1.0));
}

TEST(FitRange, Examples) {
  EXPECT_NEAR(fit_range_from_scale(0.2832).second, 3.531, 1e-3);
  EXPECT_NEAR(fit_range_from_scale(0.49, FitAbscissa::t).second, 2.041, 1e-3);
  EXPECT_EQ(fit_range_from_scale(1.0), std::make_pair(0.0, 1.0));
  EXPECT_THROW(fit_range_from_scale(0.0), DomainError);
}

TEST(FitIterative, RestrictsToValidityRange) {
  const CrossoverFitModel m{FitForm::scale_shift, FitAbscissa::nt};
  auto d = synthetic(m, params({0.3, -0.005}), 1e-4, 10);
  // Past 1/a the data drift away from the model; the iteration must drop them.
  for (auto& pt : d)
    if (pt.x > 1.0 / 0.3) pt.y -= 0.01;
  const FitResult f = fit_crossover_iterative(d, m);
  EXPECT_LE(f.x_max, 1.0 / 0.3 * 1.05);
  EXPECT_NEAR(f.parameters(0), 0.3, 0.01);
}
