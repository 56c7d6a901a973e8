#pragma once

// Periodic spin-1/2 Heisenberg chain with random longitudinal fields,
//   H = sum_k S_k . S_{k+1} + sum_k h_k S^z_k,   S_{L+1} = S_1,
// restricted to a fixed number of up spins. Bit k of a configuration is site k
// (1 = up). Basis states are ordered by their integer encoding.

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "rmtmix/matrices.hpp"
#include "rmtmix/rng.hpp"

namespace rmtmix {

class SubspaceBasis {
 public:
  using Config = std::uint64_t;

  /// All L-bit configurations with n_up set bits. Requires 2 <= L <= 64.
  SubspaceBasis(int length, int n_up) : length_(length), n_up_(n_up) {
    if (length < 2 || length > 64) throw ConfigError("SubspaceBasis: chain length must be in [2, 64]");
    if (n_up < 0 || n_up > length)
      throw ConfigError("SubspaceBasis: n_up = " + std::to_string(n_up) + " outside [0, " + std::to_string(length) + "]");
    const std::uint64_t count = binomial(length, n_up);
    if (count > (std::uint64_t{1} << 26)) throw ConfigError("SubspaceBasis: subspace too large for dense storage");
    states_.reserve(count);
    Config c = n_up == 0 ? 0 : (n_up == 64 ? ~Config{0} : (Config{1} << n_up) - 1);
    for (std::uint64_t i = 0; i < count; ++i) {
      states_.push_back(c);
      if (i + 1 == count) break;
      // Gosper's hack: next integer with the same popcount.
      const Config low = c & (~c + 1);
      const Config ripple = c + low;
      c = (((ripple ^ c) >> 2) / low) | ripple;
    }
    index_.reserve(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], static_cast<Eigen::Index>(i));
  }

  static std::uint64_t binomial(int n, int k) {
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
  }

  int length() const { return length_; }
  int n_up() const { return n_up_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(states_.size()); }
  const std::vector<Config>& states() const { return states_; }
  Config state(Eigen::Index i) const { return states_.at(static_cast<std::size_t>(i)); }

  /// Position of `c`, or -1 if it is not in this subspace.
  Eigen::Index index_of(Config c) const {
    const auto it = index_.find(c);
    return it == index_.end() ? -1 : it->second;
  }

 private:
  int length_;
  int n_up_;
  std::vector<Config> states_;
  std::unordered_map<Config, Eigen::Index> index_;
};

inline SubspaceBasis build_basis(int length, int n_up) { return SubspaceBasis(length, n_up); }

struct DisorderRealization {
  RealVector fields;
  double strength;
};

/// Fields uniform on the open interval (-h, h).
inline DisorderRealization sample_disorder(int length, double h, RngStream& rng) {
  if (length < 1) throw ConfigError("sample_disorder: chain length must be positive");
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("sample_disorder: strength must be positive and finite");
  RealVector f(length);
  for (int k = 0; k < length; ++k) {
    double x;
    do x = h * (2.0 * uniform_open01(rng) - 1.0);
    while (!(x > -h && x < h));
    f(k) = x;
  }
  return {std::move(f), h};
}

namespace detail {

inline void require_disorder(const DisorderRealization& d, int length) {
  if (d.fields.size() != length)
    throw ShapeError("disorder has " + std::to_string(d.fields.size()) + " fields for a chain of length " +
                     std::to_string(length));
}

}  // namespace detail

inline RealSymmetricMatrix heisenberg(const SubspaceBasis& basis, const DisorderRealization& disorder) {
  const int l = basis.length();
  detail::require_disorder(disorder, l);
  const Eigen::Index n = basis.size();
  RealMatrix h = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = basis.state(i);
    double diag = 0.0;
    for (int k = 0; k < l; ++k) {
      const int k1 = (k + 1) % l;
      const bool up = (c >> k) & 1U;
      const bool up1 = (c >> k1) & 1U;
      diag += 0.5 * disorder.fields(k) * (up ? 1.0 : -1.0);
      diag += up == up1 ? 0.25 : -0.25;
    }
    h(i, i) = diag;
    for (int k = 0; k < l; ++k) {
      const int k1 = (k + 1) % l;
      if (((c >> k) & 1U) == ((c >> k1) & 1U)) continue;
      const auto flipped = c ^ ((SubspaceBasis::Config{1} << k) | (SubspaceBasis::Config{1} << k1));
      const Eigen::Index j = basis.index_of(flipped);
      if (j > i) {
        h(i, j) += 0.5;
        h(j, i) += 0.5;
      }
    }
  }
  return RealSymmetricMatrix(std::move(h));
}

/// One up spin on L sites; works for chains longer than 64 sites.
inline RealSymmetricMatrix one_excitation_hamiltonian(int length, const DisorderRealization& disorder) {
  if (length < 2) throw ConfigError("one_excitation_hamiltonian: chain length must be >= 2");
  detail::require_disorder(disorder, length);
  const double field_sum = disorder.fields.sum();
  RealMatrix h = RealMatrix::Zero(length, length);
  // Two bonds touch the excited site and are antiparallel, the rest are parallel.
  const double zz = 0.25 * (length - 2) - 0.25 * 2;
  for (int k = 0; k < length; ++k) {
    const double field = 0.5 * disorder.fields(k) - 0.5 * (field_sum - disorder.fields(k));
    h(k, k) = zz + field;
  }
  for (int k = 0; k < length; ++k) {
    const int k1 = (k + 1) % length;
    h(k, k1) += 0.5;
    h(k1, k) += 0.5;
  }
  return RealSymmetricMatrix(std::move(h));
}

}  // namespace rmtmix
