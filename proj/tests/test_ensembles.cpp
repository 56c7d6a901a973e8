#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rmtmix/ensembles.hpp"
#include "rmtmix/linalg.hpp"

using namespace rmtmix;

namespace {

RngStream test_rng(std::uint64_t member, std::uint64_t seed = 7) {
  return RngStream(seed, make_stream_id(StreamPurpose::test, 0, member));
}

}  // namespace

TEST(Rng, SameSeedAndStreamReproduce) {
  RngStream a(42, 5), b(42, 5);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, DistinctStreamsDiffer) {
  RngStream a(42, make_stream_id(StreamPurpose::hamiltonian, 0, 0));
  RngStream b(42, make_stream_id(StreamPurpose::hamiltonian, 0, 1));
  int equal = 0;
  for (int i = 0; i < 1000; ++i) equal += a() == b();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, StreamIdPacking) {
  EXPECT_EQ(make_stream_id(StreamPurpose::hamiltonian, 3, 2, 1), (1ull << 56) | (3ull << 32) | (2ull << 12) | 1ull);
  EXPECT_THROW(make_stream_id(StreamPurpose::hamiltonian, 1ull << 24), ConfigError);
  EXPECT_THROW(make_stream_id(StreamPurpose::hamiltonian, 0, 1ull << 20), ConfigError);
  EXPECT_THROW(make_stream_id(StreamPurpose::hamiltonian, 0, 0, 1ull << 12), ConfigError);
}

TEST(Rng, NormalAndUniformMoments) {
  RngStream r = test_rng(1);
  std::vector<double> g, u;
  for (int i = 0; i < 200000; ++i) {
    g.push_back(standard_normal(r));
    u.push_back(uniform_open01(r));
  }
  const auto mg = oracle::moments(g);
  EXPECT_NEAR(mg.mean, 0.0, 5.0 / std::sqrt(200000.0));
  EXPECT_NEAR(mg.variance, 1.0, 5.0 * mg.std_error_of_variance);
  EXPECT_GT(oracle::ks_one_sample(u, [](double x) { return x; }), 0.01);
  for (double x : u) ASSERT_TRUE(x > 0.0 && x < 1.0);
}

TEST(Goe, TwoByTwoIsSymmetricFromThreeDraws) {
  RngStream r = test_rng(2), q = test_rng(2);
  const RealSymmetricMatrix h = sample_goe(2, r);
  EXPECT_EQ(h(0, 1), h(1, 0));
  const double d0 = standard_normal(q), off = standard_normal(q), d1 = standard_normal(q);
  EXPECT_EQ(h(0, 0), d0);
  EXPECT_EQ(h(0, 1), std::sqrt(0.5) * off);
  EXPECT_EQ(h(1, 1), d1);
}

TEST(Goe, Deterministic) {
  RngStream a = test_rng(3), b = test_rng(3);
  EXPECT_EQ(sample_goe(16, a).entries(), sample_goe(16, b).entries());
}

TEST(Goe, RejectsSmallDimension) {
  RngStream r = test_rng(4);
  EXPECT_THROW(sample_goe(1, r), InvalidDimension);
  EXPECT_THROW(sample_antisymmetric(1, r), InvalidDimension);
  EXPECT_THROW(sample_gue(0, r), InvalidDimension);
  EXPECT_THROW(sample_real_state(0, r), InvalidDimension);
}

TEST(Goe, VarianceContractAt512) {
  std::vector<double> diag, off;
  for (int d = 0; d < 100; ++d) {
    RngStream r = test_rng(100 + d);
    const RealSymmetricMatrix h = sample_goe(512, r);
    for (int i = 0; i < 512; ++i) {
      diag.push_back(h(i, i));
      // One off-diagonal row segment per draw keeps the sample manageable.
      if (i > 0) off.push_back(h(i, i - 1));
    }
    for (int i = 0; i < 512; ++i)
      for (int j = i + 2; j < 512; j += 7) off.push_back(h(i, j));
  }
  const auto md = oracle::moments(diag), mo = oracle::moments(off);
  EXPECT_NEAR(md.variance, 1.0, 5.0 * md.std_error_of_variance);
  EXPECT_NEAR(mo.variance, 0.5, 5.0 * mo.std_error_of_variance);
  EXPECT_NEAR(mo.mean, 0.0, 5.0 * std::sqrt(0.5 / mo.n));
}

TEST(Goe, OrthogonalInvarianceProxy) {
  std::mt19937_64 gen(11);
  std::vector<double> plain, rotated;
  for (int s = 0; s < 200; ++s) {
    RngStream r = test_rng(1000 + s);
    const RealSymmetricMatrix h = sample_goe(128, r);
    const RealMatrix o = oracle::random_orthogonal(128, gen);
    const RealMatrix hr = o.transpose() * h.entries() * o;
    const RealVector e1 = linalg::eigenvalues_hermitian(h.entries());
    const RealVector e2 = linalg::eigenvalues_hermitian(RealMatrix(0.5 * (hr + hr.transpose())));
    // Every 8th level keeps the pooled samples nearly independent.
    for (int i = 0; i < 128; i += 8) {
      plain.push_back(e1(i));
      rotated.push_back(e2(i + 4));
    }
  }
  // Same marginal law after rotation: compare against a second independent batch.
  std::vector<double> other;
  for (int s = 0; s < 200; ++s) {
    RngStream r = test_rng(5000 + s);
    const RealVector e = linalg::eigenvalues_hermitian(sample_goe(128, r).entries());
    for (int i = 4; i < 128; i += 8) other.push_back(e(i));
  }
  EXPECT_GT(oracle::ks_two_sample(rotated, other), 0.01);
  // Rotation leaves the spectrum itself unchanged.
  RngStream r = test_rng(77);
  const RealSymmetricMatrix h = sample_goe(64, r);
  const RealMatrix o = oracle::random_orthogonal(64, gen);
  const RealMatrix hr = o.transpose() * h.entries() * o;
  EXPECT_LT((linalg::eigenvalues_hermitian(h.entries()) -
             linalg::eigenvalues_hermitian(RealMatrix(0.5 * (hr + hr.transpose()))))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
}

TEST(Antisymmetric, TwoByTwoShape) {
  RngStream r = test_rng(6);
  const RealAntisymmetricMatrix a = sample_antisymmetric(2, r);
  EXPECT_EQ(a(0, 0), 0.0);
  EXPECT_EQ(a(1, 1), 0.0);
  EXPECT_EQ(a(0, 1), -a(1, 0));
}

TEST(Antisymmetric, VarianceContractAt512) {
  std::vector<double> off;
  for (int d = 0; d < 100; ++d) {
    RngStream r = test_rng(300 + d);
    const RealAntisymmetricMatrix a = sample_antisymmetric(512, r);
    for (int i = 0; i < 512; ++i) {
      ASSERT_EQ(a(i, i), 0.0);
      for (int j = i + 1; j < 512; j += 7) off.push_back(a(i, j));
    }
  }
  const auto m = oracle::moments(off);
  EXPECT_NEAR(m.variance, 0.5, 5.0 * m.std_error_of_variance);
}

TEST(Crossover, AlphaZeroEqualsS) {
  RngStream r = test_rng(8);
  const RealSymmetricMatrix s = sample_goe(8, r);
  const RealAntisymmetricMatrix a = sample_antisymmetric(8, r);
  const HermitianMatrix h = crossover_hamiltonian(s, a, 0.0);
  EXPECT_TRUE(h.is_real());
  EXPECT_EQ(RealMatrix(h.entries().real()), s.entries());
  EXPECT_EQ(RealMatrix(h.entries().imag()), RealMatrix::Zero(8, 8));
}

TEST(Crossover, TwoByTwoAnalytic) {
  RealMatrix am(2, 2);
  am << 0, 1, -1, 0;
  const HermitianMatrix h =
      crossover_hamiltonian(RealSymmetricMatrix(RealMatrix::Zero(2, 2)), RealAntisymmetricMatrix(am), 1.0);
  EXPECT_EQ(h(0, 1), Complex(0, 1));
  EXPECT_EQ(h(1, 0), Complex(0, -1));
  const RealVector e = linalg::eigenvalues_hermitian(h.entries());
  EXPECT_NEAR(e(0), -1.0, 1e-14);
  EXPECT_NEAR(e(1), 1.0, 1e-14);
}

TEST(Crossover, ExactlyHermitianAndShapeChecked) {
  RngStream r = test_rng(9);
  const RealSymmetricMatrix s = sample_goe(12, r);
  const RealAntisymmetricMatrix a = sample_antisymmetric(12, r);
  const HermitianMatrix h = crossover_hamiltonian(s, a, 0.37);
  EXPECT_EQ((h.entries() - h.entries().adjoint()).cwiseAbs().maxCoeff(), 0.0);
  const RealAntisymmetricMatrix small = sample_antisymmetric(3, r);
  EXPECT_THROW(crossover_hamiltonian(s, small, 1.0), ShapeError);
}

TEST(Gue, TwoByTwoFromFourDraws) {
  RngStream r = test_rng(10), q = test_rng(10);
  const HermitianMatrix h = sample_gue(2, r);
  const double d0 = standard_normal(q), re = standard_normal(q), im = standard_normal(q), d1 = standard_normal(q);
  EXPECT_EQ(h(0, 0), Complex(d0, 0));
  EXPECT_EQ(h(0, 1), Complex(std::sqrt(0.5) * re, std::sqrt(0.5) * im));
  EXPECT_EQ(h(1, 0), std::conj(h(0, 1)));
  EXPECT_EQ(h(1, 1), Complex(d1, 0));
}

TEST(Gue, VarianceContractAt512) {
  std::vector<double> diag, re, im;
  for (int d = 0; d < 100; ++d) {
    RngStream r = test_rng(500 + d);
    const HermitianMatrix h = sample_gue(512, r);
    for (int i = 0; i < 512; ++i) {
      diag.push_back(h(i, i).real());
      ASSERT_EQ(h(i, i).imag(), 0.0);
      for (int j = i + 1; j < 512; j += 11) {
        re.push_back(h(i, j).real());
        im.push_back(h(i, j).imag());
      }
    }
  }
  const auto md = oracle::moments(diag), mr = oracle::moments(re), mi = oracle::moments(im);
  EXPECT_NEAR(md.variance, 1.0, 5.0 * md.std_error_of_variance);
  EXPECT_NEAR(mr.variance, 0.5, 5.0 * mr.std_error_of_variance);
  EXPECT_NEAR(mi.variance, 0.5, 5.0 * mi.std_error_of_variance);
}

TEST(RealState, OneDimensional) {
  RngStream r = test_rng(11);
  const PureState s = sample_real_state(1, r);
  EXPECT_NEAR(std::abs(s(0).real()), 1.0, 1e-15);
  EXPECT_EQ(s(0).imag(), 0.0);
}

TEST(RealState, RealNormalizedAndNearlyOrthogonal) {
  RngStream r1 = test_rng(12), r2 = test_rng(13);
  const PureState a = sample_real_state(1024, r1), b = sample_real_state(1024, r2);
  EXPECT_TRUE(a.is_real());
  EXPECT_EQ(a.amplitudes().imag().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(a.amplitudes().norm(), 1.0, 1e-12);
  EXPECT_LT(std::abs(a.amplitudes().dot(b.amplitudes())), 0.2);
}

TEST(BasisState, Positions) {
  const PureState a = basis_state(4, 0), b = basis_state(4, 3);
  EXPECT_EQ(a.amplitudes(), ComplexVector::Unit(4, 0));
  EXPECT_EQ(b.amplitudes(), ComplexVector::Unit(4, 3));
  EXPECT_EQ(a.amplitudes().norm(), 1.0);
  EXPECT_THROW(basis_state(4, 4), IndexError);
  EXPECT_THROW(basis_state(4, -1), IndexError);
}

TEST(Types, InvariantsEnforced) {
  RealMatrix m(2, 2);
  m << 1, 2, 3, 4;
  EXPECT_THROW(RealSymmetricMatrix{m}, Error);
  EXPECT_THROW(RealAntisymmetricMatrix{m}, Error);
  ComplexVector v(2);
  v << 1.0, 1.0;
  EXPECT_THROW(PureState{v}, Error);
  EXPECT_NO_THROW(PureState::normalized(v));
}
