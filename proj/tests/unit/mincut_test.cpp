#include <gtest/gtest.h>

#include <set>

#include "brute.hpp"
#include "fpclean/error.hpp"
#include "fpclean/mincut.hpp"
#include "fpclean/random.hpp"

namespace fpclean {
namespace {

using testing::brute_components;
using testing::brute_min_cut_size;

bool disconnects(const SimpleGraph& g, const std::vector<std::size_t>& cut) {
  std::set<std::size_t> removed(cut.begin(), cut.end());
  std::vector<testing::BruteEdge> rest;
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    if (!removed.contains(i)) rest.push_back(g.edges[i]);
  auto root = brute_components(g.node_count, rest);
  return std::any_of(root.begin(), root.end(), [](auto r) { return r != 0; });
}

SimpleGraph random_connected(Rng& rng, std::size_t n, std::size_t m) {
  SimpleGraph g;
  g.node_count = n;
  for (std::uint32_t v = 1; v < n; ++v) g.edges.emplace_back(static_cast<std::uint32_t>(rng.below(v)), v);
  std::set<testing::BruteEdge> used(g.edges.begin(), g.edges.end());
  while (g.edges.size() < m) {
    auto a = static_cast<std::uint32_t>(rng.below(n));
    auto b = static_cast<std::uint32_t>(rng.below(n));
    if (a == b) continue;
    testing::BruteEdge e{std::min(a, b), std::max(a, b)};
    if (!used.insert(e).second) continue;
    g.edges.push_back(e);
  }
  return g;
}

TEST(GlobalMinCut, RejectsSingleNode) {
  SimpleGraph g;
  g.node_count = 1;
  try {
    global_min_cut(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateComponent);
  }
}

TEST(GlobalMinCut, DisconnectedGraphHasEmptyCut) {
  SimpleGraph g{4, {{0, 1}, {2, 3}}};
  EXPECT_TRUE(global_min_cut(g).empty());
}

TEST(GlobalMinCut, BridgeBetweenTriangles) {
  // Two triangles joined by 2-3; every node has degree >= 2, so the bridge wins.
  SimpleGraph g{6, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 5}, {4, 5}}};
  EXPECT_EQ(global_min_cut(g), (std::vector<std::size_t>{3}));
}

TEST(GlobalMinCut, DegreeTiePrefersLowestNodeStar) {
  // Path 0-1-2: both leaves have degree 1; node 0's edge is chosen.
  SimpleGraph g{3, {{1, 2}, {0, 1}}};
  EXPECT_EQ(global_min_cut(g), (std::vector<std::size_t>{1}));
}

TEST(GlobalMinCut, ParallelEdgesCountSeparately) {
  SimpleGraph g{3, {{0, 1}, {0, 1}, {1, 2}}};
  EXPECT_EQ(global_min_cut(g), (std::vector<std::size_t>{2}));
}

// Property: on random connected graphs with up to 12 edges the cut has the
// exhaustive minimum size and actually disconnects the graph.
TEST(GlobalMinCut, MatchesExhaustiveSearch) {
  Rng rng(2024);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const std::size_t max_m = std::min<std::size_t>(12, n * (n - 1) / 2);
    const std::size_t m = (n - 1) + rng.below(max_m - (n - 1) + 1);
    auto g = random_connected(rng, n, m);
    auto cut = global_min_cut(g);
    ASSERT_EQ(cut.size(), brute_min_cut_size(n, g.edges)) << "trial " << trial;
    ASSERT_TRUE(disconnects(g, cut)) << "trial " << trial;
    ASSERT_TRUE(std::is_sorted(cut.begin(), cut.end()));
  }
}

TEST(GlobalMinCut, IsDeterministic) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = random_connected(rng, 7, 12);
    EXPECT_EQ(global_min_cut(g), global_min_cut(g));
  }
}

}  // namespace
}  // namespace fpclean
