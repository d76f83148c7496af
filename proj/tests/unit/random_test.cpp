#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "fpclean/random.hpp"

namespace fpclean {
namespace {

// Reference SplitMix64 output for seed 0, as published with the algorithm.
TEST(Rng, MatchesSplitMix64Reference) {
  Rng rng(0);
  EXPECT_EQ(rng.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next(), 0x06c45d188009454fULL);
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) EXPECT_LT(rng.below(13), 13u);
}

TEST(Rng, ShuffleIsAPermutation) {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng rng(3);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
}

TEST(StableHash, SeparatesParts) {
  EXPECT_NE(stable_hash(1, {"ab", "c"}), stable_hash(1, {"a", "bc"}));
  EXPECT_NE(stable_hash(1, {"a"}), stable_hash(2, {"a"}));
  EXPECT_EQ(stable_hash(5, {"x", "y"}), stable_hash(5, {"x", "y"}));
}

TEST(UnitInterval, CoversHalfOpenRange) {
  EXPECT_EQ(unit_interval(0), 0.0);
  EXPECT_LT(unit_interval(~0ULL), 1.0);
  EXPECT_GT(unit_interval(~0ULL), 0.9999999);
}

TEST(StableHash, RoughlyUniform) {
  int below_half = 0;
  for (int i = 0; i < 10000; ++i)
    if (unit_interval(stable_hash(9, {std::to_string(i)})) < 0.5) ++below_half;
  EXPECT_NEAR(below_half, 5000, 200);
}

}  // namespace
}  // namespace fpclean
