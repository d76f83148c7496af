#include <gtest/gtest.h>

#include <cmath>

#include "brute.hpp"
#include "fixtures.hpp"
#include "fpclean/error.hpp"
#include "fpclean/eval.hpp"
#include "fpclean/random.hpp"

namespace fpclean {
namespace {

using testing::make_dataset;

// Entities {a,b,c} and {d,e,f}, each a triangle, joined by one false edge.
struct Bridge {
  MatchingGraph g;
  GroundTruth gt;
};

Bridge bridge() {
  Bridge b{MatchingGraph(make_dataset({"a", "b", "c", "d", "e", "f"})),
           GroundTruth{{{"a", "X"}, {"b", "X"}, {"c", "X"}, {"d", "Y"}, {"e", "Y"}, {"f", "Y"}}}};
  for (auto [x, y] : std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}, {2, 3}})
    b.g.add_edge(NodePair(x, y));
  return b;
}

TEST(Score, PerfectMatching) {
  auto b = bridge();
  b.g.reject(std::vector<NodePair>{NodePair(2, 3)});
  for (auto scope : {Scope::PairwiseOnly, Scope::WithTransitive}) {
    auto s = score(b.g, b.gt, scope);
    EXPECT_DOUBLE_EQ(s.precision, 1.0);
    EXPECT_DOUBLE_EQ(s.recall, 1.0);
    EXPECT_DOUBLE_EQ(s.f1, 1.0);
  }
}

TEST(Score, BridgeBlowsUpUnderClosure) {
  auto b = bridge();
  auto pw = score(b.g, b.gt, Scope::PairwiseOnly);
  EXPECT_EQ(pw.tp, 6u);
  EXPECT_EQ(pw.fp, 1u);
  auto wt = score(b.g, b.gt, Scope::WithTransitive);
  EXPECT_EQ(wt.tp, 6u);
  EXPECT_EQ(wt.fp, 9u);
  EXPECT_EQ(wt.fn, 0u);
  EXPECT_DOUBLE_EQ(wt.precision, 6.0 / 15.0);
}

TEST(Score, EmptyGraphHasZeroF1) {
  MatchingGraph g(make_dataset({"a", "b"}));
  GroundTruth gt{{{"a", "X"}, {"b", "X"}}};
  auto s = score(g, gt, Scope::WithTransitive);
  EXPECT_EQ(s.fn, 1u);
  EXPECT_EQ(s.f1, 0.0);
  EXPECT_EQ(gt.total_pairs(), 1u);
  EXPECT_TRUE(gt.same_entity("a", "b"));
  EXPECT_FALSE(gt.same_entity("a", "zz"));
}

// Property: closure scores agree with counting brute-force closure pairs.
TEST(ScoreProperty, WithTransitiveMatchesBruteClosure) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.below(20);
    std::vector<std::string> ids;
    GroundTruth gt;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("z" + std::to_string(100 + i));
      if (!rng.bernoulli(0.1)) gt.assignment[ids.back()] = "E" + std::to_string(rng.below(n / 2 + 1));
    }
    MatchingGraph g(make_dataset(ids));
    std::vector<testing::BruteEdge> edges;
    for (std::size_t e = 0, m = rng.below(n + 5); e < m; ++e) {
      auto a = static_cast<NodeId>(rng.below(n)), b = static_cast<NodeId>(rng.below(n));
      if (a == b || g.is_live(NodePair(a, b))) continue;
      g.add_edge(NodePair(a, b));
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::uint64_t tp = 0, fp = 0;
    for (auto [a, b] : testing::brute_closure(n, edges)) (gt.same_entity(ids[a], ids[b]) ? tp : fp)++;
    std::uint64_t truth_pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (gt.same_entity(ids[i], ids[j])) ++truth_pairs;
    auto s = score(g, gt, Scope::WithTransitive);
    ASSERT_EQ(s.tp, tp);
    ASSERT_EQ(s.fp, fp);
    ASSERT_EQ(s.fn, truth_pairs - tp);
    ASSERT_EQ(gt.total_pairs(), truth_pairs);
  }
}

TEST(RemovalStats, Unchanged) {
  auto b = bridge();
  auto s = removal_stats(b.g, b.g, b.gt);
  EXPECT_EQ(s.tp_removed_pct, 0.0);
  EXPECT_EQ(s.fp_removed_pct, 0.0);
}

TEST(RemovalStats, EverythingRemoved) {
  auto b = bridge();
  MatchingGraph empty(b.g.dataset_ptr());
  auto s = removal_stats(b.g, empty, b.gt);
  EXPECT_EQ(s.tp_removed_pct, 100.0);
  EXPECT_EQ(s.fp_removed_pct, 100.0);
  EXPECT_EQ(s.fp_before, 9u);
}

TEST(RemovalStats, CuttingTheBridge) {
  auto b = bridge();
  auto after = b.g;
  after.reject(std::vector<NodePair>{NodePair(2, 3)});
  auto s = removal_stats(b.g, after, b.gt);
  EXPECT_EQ(s.tp_removed, 0u);
  EXPECT_EQ(s.fp_removed, 9u);
  EXPECT_EQ(s.fp_removed_pct, 100.0);
}

TEST(Pearson, KnownValues) {
  std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, c{5, 5, 5, 5};
  EXPECT_NEAR(*pearson(x, y), 1.0, 1e-12);
  EXPECT_NEAR(*pearson(x, z), -1.0, 1e-12);
  EXPECT_FALSE(pearson(x, c));
  std::vector<double> a{1, 2, 3}, b{1, 3, 2};
  EXPECT_NEAR(*pearson(a, b), 0.5, 1e-12);
  std::vector<double> one{1};
  EXPECT_THROW(pearson(one, one), Error);
}

TEST(ProxyCorrelation, ConstantSeriesIsUndefined) {
  std::vector<TransitiveReport> reports(3);
  std::vector<TruthPoint> truth{{1, 5}, {2, 4}, {3, 3}};
  for (std::size_t i = 0; i < 3; ++i) {
    reports[i].total_pos = 10;
    reports[i].total_neg = 6 - i;
  }
  auto pc = proxy_correlation(reports, truth);
  EXPECT_FALSE(pc.pos_vs_tp);
  ASSERT_TRUE(pc.neg_vs_fp);
  EXPECT_NEAR(*pc.neg_vs_fp, 1.0, 1e-12);
}

TEST(ProxyCorrelation, CleanupVariantSkipsPreCleanup) {
  std::vector<TransitiveReport> reports(4);
  std::vector<TruthPoint> truth{{0, 1000}, {1, 30}, {2, 20}, {3, 10}};
  reports[0].step_name = "pre_cleanup";
  reports[0].total_pos = 999;
  reports[0].total_neg = 1;
  for (std::size_t i = 1; i < 4; ++i) {
    reports[i].step_name = "s" + std::to_string(i);
    reports[i].total_pos = i;
    reports[i].total_neg = 40 - 10 * i;
  }
  auto pc = cleanup_proxy_correlation(reports, truth);
  EXPECT_NEAR(*pc.pos_vs_tp, 1.0, 1e-12);
  EXPECT_NEAR(*pc.neg_vs_fp, 1.0, 1e-12);
  EXPECT_LT(*proxy_correlation(reports, truth).pos_vs_tp, 0.0);
  try {
    cleanup_proxy_correlation(reports, std::span(truth).first(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSeries);
  }
}

TEST(FormatPercent, TwoDecimals) {
  EXPECT_EQ(format_percent(0.8154), "81.54");
  EXPECT_EQ(format_percent(0.0004), "0.04");
  EXPECT_EQ(format_percent(1.0), "100.00");
}

}  // namespace
}  // namespace fpclean
