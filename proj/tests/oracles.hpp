#pragma once

// Independent reference computations for the test suite. Nothing here calls
// into the library's numerical code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

/// exp(A) by scaling and squaring with a degree-24 Taylor polynomial.
inline CMatrix expm(const CMatrix& a) {
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const CMatrix x = a / std::ldexp(1.0, squarings);
  CMatrix term = CMatrix::Identity(a.rows(), a.cols());
  CMatrix sum = term;
  for (int k = 1; k <= 24; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// rho(t) = (1/L) sum_l exp(-i H_l t) psi psi^dagger exp(i H_l t).
inline CMatrix mixed_state(const std::vector<CMatrix>& hs, const Eigen::VectorXcd& psi, double t) {
  CMatrix rho = CMatrix::Zero(psi.size(), psi.size());
  for (const auto& h : hs) {
    const Eigen::VectorXcd v = expm(Complex(0.0, -t) * h) * psi;
    rho += v * v.adjoint();
  }
  return rho / static_cast<double>(hs.size());
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(s, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov p-value.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  return kolmogorov_q((std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d);
}

/// One-sample Kolmogorov-Smirnov p-value against a continuous CDF.
inline double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return kolmogorov_q((std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d);
}

struct Moments {
  double mean = 0.0, variance = 0.0, std_error_of_variance = 0.0;
  std::size_t n = 0;
};

/// Sample mean and unbiased variance, with the standard error of the variance
/// estimated from the fourth central moment.
inline Moments moments(const std::vector<double>& x) {
  Moments m;
  m.n = x.size();
  const double n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m.variance = m2 / (n - 1.0);
  m2 /= n;
  m4 /= n;
  m.std_error_of_variance = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  return m;
}

/// Plain r~ mean over consecutive spacing ratios of a sorted list.
inline double r_tilde(const std::vector<double>& sorted) {
  double s = 0.0;
  int n = 0;
  for (std::size_t i = 1; i + 1 < sorted.size(); ++i) {
    const double a = sorted[i] - sorted[i - 1], b = sorted[i + 1] - sorted[i];
    if (a <= 0.0 || b <= 0.0) continue;
    s += std::min(a, b) / std::max(a, b);
    ++n;
  }
  return s / n;
}

/// Full 2^L Heisenberg ring from Kronecker products of spin operators, then
/// restricted to configurations with n_up set bits (ascending integer order).
/// Bit k of a configuration is site k; a set bit is spin up.
inline RMatrix heisenberg_dense(int length, int n_up, const std::vector<double>& fields) {
  const int dim = 1 << length;
  RMatrix sz = RMatrix::Zero(2, 2), sp = RMatrix::Zero(2, 2), sm = RMatrix::Zero(2, 2);
  // Local basis index 0 = down, 1 = up.
  sz(0, 0) = -0.5;
  sz(1, 1) = 0.5;
  sp(1, 0) = 1.0;
  sm(0, 1) = 1.0;
  auto site_op = [&](const RMatrix& op, int site) {
    RMatrix out = RMatrix::Identity(1, 1);
    for (int k = length - 1; k >= 0; --k) {
      const RMatrix f = k == site ? op : RMatrix::Identity(2, 2);
      RMatrix next(out.rows() * 2, out.cols() * 2);
      for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = out(i, j) * f;
      out = next;
    }
    return out;
  };
  RMatrix h = RMatrix::Zero(dim, dim);
  for (int k = 0; k < length; ++k) {
    const int q = (k + 1) % length;
    h += site_op(sz, k) * site_op(sz, q);
    h += 0.5 * (site_op(sp, k) * site_op(sm, q) + site_op(sm, k) * site_op(sp, q));
    h += fields[static_cast<std::size_t>(k)] * site_op(sz, k);
  }
  std::vector<int> keep;
  for (int c = 0; c < dim; ++c)
    if (__builtin_popcount(static_cast<unsigned>(c)) == n_up) keep.push_back(c);
  RMatrix out(keep.size(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = 0; j < keep.size(); ++j) out(i, j) = h(keep[i], keep[j]);
  return out;
}

/// Haar-ish random orthogonal matrix from QR of a Gaussian matrix.
inline RMatrix random_orthogonal(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  RMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(gen);
  Eigen::HouseholderQR<RMatrix> qr(a);
  RMatrix q = qr.householderQ();
  const RMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

}  // namespace oracle
