#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (seed, stream id, draw index): the engine is
// Philox2x64-10 keyed by the 64-bit seed, with the 128-bit counter split into a
// 64-bit block index and the 64-bit stream id. Distinct stream ids therefore
// never share counter values, and realizations can be farmed out in any order.
//
// Gaussian variates use the Boost.Random ziggurat sampler on top of this engine;
// uniform variates use the top 53 bits of each 64-bit output. Both are fixed
// for reproducibility of seeds.

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

#include "rmtmix/error.hpp"

namespace rmtmix {

/// Philox2x64 with 10 rounds (Salmon et al., SC'11). Counter {c0, c1}, key k.
inline std::array<std::uint64_t, 2> philox2x64_10(std::array<std::uint64_t, 2> ctr, std::uint64_t key) {
  constexpr std::uint64_t multiplier = 0xD2B74407B1CE6E93ull;
  constexpr std::uint64_t weyl = 0x9E3779B97F4A7C15ull;
  for (int r = 0; r < 10; ++r) {
    const unsigned __int128 p = static_cast<unsigned __int128>(multiplier) * ctr[0];
    ctr = {static_cast<std::uint64_t>(p >> 64) ^ key ^ ctr[1], static_cast<std::uint64_t>(p)};
    key += weyl;
  }
  return ctr;
}

enum class StreamPurpose : std::uint8_t {
  hamiltonian = 1,
  antisymmetric = 2,
  initial_state = 3,
  disorder = 4,
  test = 0xff,
};

/// Packs a structured stream address into 64 bits:
/// purpose [56,64) | realization [32,56) | member [12,32) | extra [0,12).
inline std::uint64_t make_stream_id(StreamPurpose purpose, std::uint64_t realization,
                                    std::uint64_t member = 0, std::uint64_t extra = 0) {
  if (realization >= (1ull << 24) || member >= (1ull << 20) || extra >= (1ull << 12)) {
    throw ConfigError("stream address out of range (realization < 2^24, member < 2^20, extra < 2^12)");
  }
  return (static_cast<std::uint64_t>(purpose) << 56) | (realization << 32) | (member << 12) | extra;
}

/// A reproducible random stream. Satisfies UniformRandomBitGenerator.
/// Output k is word (k mod 2) of philox2x64_10({k / 2, stream_id}, seed).
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == kBlocks * 2) refill();
    return buffer_[used_++];
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  static constexpr int kBlocks = 4;

  // Independent counters per refill so the multiply chains overlap.
  void refill() {
    std::uint64_t c0[kBlocks];
    std::uint64_t c1[kBlocks];
    for (int i = 0; i < kBlocks; ++i) {
      c0[i] = block_ + static_cast<std::uint64_t>(i);
      c1[i] = stream_;
    }
    std::uint64_t key = seed_;
    for (int r = 0; r < 10; ++r) {
      for (int i = 0; i < kBlocks; ++i) {
        const unsigned __int128 p = static_cast<unsigned __int128>(0xD2B74407B1CE6E93ull) * c0[i];
        const auto hi = static_cast<std::uint64_t>(p >> 64);
        c0[i] = hi ^ key ^ c1[i];
        c1[i] = static_cast<std::uint64_t>(p);
      }
      key += 0x9E3779B97F4A7C15ull;
    }
    for (int i = 0; i < kBlocks; ++i) {
      buffer_[2 * i] = c0[i];
      buffer_[2 * i + 1] = c1[i];
    }
    block_ += kBlocks;
    used_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2 * kBlocks> buffer_{};
  int used_ = 2 * kBlocks;
};

/// Standard normal draw (ziggurat).
inline double standard_normal(RngStream& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

/// Uniform on the open interval (0, 1): ((top 53 bits) + 1/2) / 2^53.
inline double uniform_open01(RngStream& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace rmtmix
