#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace fpclean {

// Portable randomness. Everything that must be reproducible across
// platforms (simulated matcher noise, sampling, synthetic data) goes
// through these instead of <random> distributions, whose outputs are
// implementation-defined.

std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a over each part (with a separator byte), finalized by mix64.
std::uint64_t stable_hash(std::uint64_t seed, std::initializer_list<std::string_view> parts) noexcept;

/// Maps a 64-bit hash to [0, 1) using the top 53 bits.
double unit_interval(std::uint64_t h) noexcept;

/// SplitMix64 stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;
  double uniform() noexcept { return unit_interval(next()); }
  /// Unbiased integer in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace fpclean
