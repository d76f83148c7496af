#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "fpclean/engine.hpp"
#include "fpclean/error.hpp"
#include "fpclean/eval.hpp"
#include "fpclean/io.hpp"
#include "fpclean/random.hpp"
#include "standard_fixture.hpp"

namespace fpclean {
namespace {

using testing::eleven_node_fixture;
using testing::make_dataset;
using testing::rid;

CleanupConfig fixture_config() {
  CleanupConfig c;
  c.n_iterations = 2;
  c.size_threshold = 50;
  c.lb_total = 10;
  c.seed = 0;
  return c;
}

std::unique_ptr<Oracle> truth_oracle(const std::unordered_map<std::string, std::string>& truth, const CleanupConfig& c) {
  return std::make_unique<Oracle>(std::make_unique<GroundTruthSource>(truth),
                                  BudgetLedger::with_defaults(c.lb_total, c.n_iterations, c.safety_factor));
}

std::size_t total_edges(const MatchingGraph& g) {
  return g.live_edges().size() + g.removed_pool().size() + g.rejected().size();
}

GroundTruth as_truth(const std::unordered_map<std::string, std::string>& m) { return GroundTruth{m}; }

TEST(Engine, FixtureRemovesAllFalseEdgesAndRestoresTruth) {
  auto f = eleven_node_fixture();
  const auto config = fixture_config();
  SimulatedMatcher matcher(f.matcher_spec);
  auto oracle = truth_oracle(f.truth, config);
  CleanupEngine engine(f.graph, matcher, *oracle, config);
  const NodeId r04 = f.graph.dataset().index_of(rid(4));
  while (engine.cursor().next <= config.n_iterations + 1) engine.step();
  // The cleanup cut detaches r04 from its own entity; recovery brings it back.
  EXPECT_EQ(engine.graph().component_of(r04).size(), 1u);
  engine.run();
  EXPECT_EQ(engine.graph().component_of(r04).size(), 4u);

  const auto& g = engine.graph();
  for (const auto& [a, b] : f.false_edges) EXPECT_TRUE(g.is_rejected(g.pair_of(a, b)));
  auto gt = as_truth(f.truth);
  auto post = score(g, gt, Scope::WithTransitive);
  EXPECT_EQ(post.fp, 0u);
  EXPECT_EQ(post.fn, 0u);
  EXPECT_EQ(post.tp, gt.total_pairs());
  auto rs = removal_stats(f.graph, g, gt);
  EXPECT_DOUBLE_EQ(rs.tp_removed_pct, 0.0);
  EXPECT_DOUBLE_EQ(rs.fp_removed_pct, 100.0);

  std::vector<std::string> names;
  for (const auto& r : engine.reports()) names.push_back(r.step_name);
  EXPECT_EQ(names, (std::vector<std::string>{"pre_cleanup", "breakdown", "iteration_1", "iteration_2", "post_cleanup",
                                             "edge_recovery"}));
  EXPECT_EQ(engine.reports().back().total_neg, 0u);
  EXPECT_LE(oracle->ledger().spent_total(), config.lb_total);
}

TEST(Engine, BreakdownDissolvesOnlyAboveThreshold) {
  for (std::size_t k : {50u, 51u}) {
    std::vector<std::string> ids;
    std::unordered_map<std::string, std::string> truth;
    for (std::size_t i = 0; i < k; ++i) {
      ids.push_back("n" + std::to_string(1000 + i));
      truth[ids.back()] = "E";
    }
    MatchingGraph g(make_dataset(ids));
    for (NodeId i = 1; i < k; ++i) g.add_edge(NodePair(0, i));
    CleanupConfig c;
    c.n_iterations = 1;
    c.size_threshold = 50;
    c.lb_total = 0;
    SimulatedMatcherSpec spec;
    spec.ground_truth = truth;
    SimulatedMatcher m(spec);
    auto oracle = truth_oracle(truth, c);
    CleanupEngine engine(g, m, *oracle, c);
    engine.large_component_breakdown();
    ASSERT_EQ(engine.reports().size(), 2u);
    const auto& breakdown = engine.reports()[1];
    if (k == 50) {
      EXPECT_EQ(engine.graph().live_edges().size(), 49u);
      EXPECT_TRUE(breakdown.dissolved.empty());
    } else {
      EXPECT_TRUE(engine.graph().live_edges().empty());
      EXPECT_EQ(engine.graph().removed_pool().size(), 50u);
      EXPECT_TRUE(engine.graph().components().empty());
      ASSERT_EQ(breakdown.dissolved.size(), 1u);
      EXPECT_EQ(breakdown.dissolved[0].k, 51u);
    }
  }
}

TEST(Engine, NoiselessMatcherIsANoOp) {
  auto f = eleven_node_fixture();
  auto spec = f.matcher_spec;
  spec.overrides.clear();
  SimulatedMatcher m(spec);
  MatchingGraph g(f.dataset);
  for (const auto& [a, b] : f.true_edges) g.add_edge(g.pair_of(a, b));
  auto config = fixture_config();
  auto oracle = truth_oracle(f.truth, config);
  auto result = run_cleanup(g, m, *oracle, config);
  EXPECT_EQ(clique_closure(result.final_graph), clique_closure(g));
  EXPECT_EQ(result.ledger.spent_total(), 0u);
  EXPECT_EQ(result.final_graph.live_edges().size(), g.live_edges().size());
}

TEST(Engine, ConsistentGraphSpendsNothingInCleanup) {
  auto f = eleven_node_fixture();
  auto spec = f.matcher_spec;
  spec.overrides.clear();
  SimulatedMatcher m(spec);
  MatchingGraph g(f.dataset);
  for (const auto& [a, b] : f.true_edges) g.add_edge(g.pair_of(a, b));
  auto config = fixture_config();
  auto oracle = truth_oracle(f.truth, config);
  CleanupEngine engine(g, m, *oracle, config);
  engine.post_finetune_cleanup();
  EXPECT_EQ(oracle->ledger().spent_postft(), 0u);
  EXPECT_EQ(engine.graph().live_edges().size(), g.live_edges().size());
}

// A chain of two true pairs joined by one false edge in the middle.
TEST(Engine, CandidateSelectionReachesTheBridgingFalseEdge) {
  auto ds = make_dataset({"r12", "r13", "r14", "r15"});
  std::unordered_map<std::string, std::string> truth{{"r12", "X"}, {"r13", "X"}, {"r14", "Y"}, {"r15", "Y"}};
  MatchingGraph g(ds);
  g.add_edge(g.pair_of("r12", "r13"));
  g.add_edge(g.pair_of("r13", "r14"));
  g.add_edge(g.pair_of("r14", "r15"));
  SimulatedMatcherSpec spec;
  spec.ground_truth = truth;
  SimulatedMatcher m(spec);
  auto config = fixture_config();
  auto oracle = truth_oracle(truth, config);
  CleanupEngine engine(g, m, *oracle, config);
  auto evals = engine.evaluate_components();
  ASSERT_EQ(evals.size(), 1u);
  EXPECT_EQ(evals[0].neg, 3u);
  auto cand = engine.select_candidate_edges(evals[0], 0);
  EXPECT_NE(std::find(cand.begin(), cand.end(), g.pair_of("r13", "r14")), cand.end());
}

TEST(Engine, CliqueWithoutNegativesSelectsOnlyTheMinCut) {
  auto ds = make_dataset({"a", "b", "c", "d"});
  std::unordered_map<std::string, std::string> truth{{"a", "E"}, {"b", "E"}, {"c", "E"}, {"d", "E"}};
  MatchingGraph g(ds);
  for (NodeId i = 0; i < 4; ++i)
    for (NodeId j = i + 1; j < 4; ++j)
      if (!(i == 0 && j == 3)) g.add_edge(NodePair(i, j));
  SimulatedMatcherSpec spec;
  spec.ground_truth = truth;
  SimulatedMatcher m(spec);
  auto config = fixture_config();
  auto oracle = truth_oracle(truth, config);
  CleanupEngine engine(g, m, *oracle, config);
  auto eval = engine.evaluate_components().at(0);
  EXPECT_EQ(eval.neg, 0u);
  EXPECT_EQ(engine.select_candidate_edges(eval, 0), min_edge_cut(g, eval.component));
}

TEST(Engine, FixturePathsForNegativeR05R10CrossAFalseEdge) {
  auto f = eleven_node_fixture();
  std::set<NodePair> false_edges;
  for (const auto& [a, b] : f.false_edges) false_edges.insert(f.graph.pair_of(a, b));
  auto config = fixture_config();
  config.shortest_path_subset_size = 1000;  // take every negative
  SimulatedMatcher m(f.matcher_spec);
  auto oracle = truth_oracle(f.truth, config);
  CleanupEngine engine(f.graph, m, *oracle, config);
  auto eval = engine.evaluate_components().at(0);
  const auto target = f.graph.pair_of(rid(5), rid(10));
  ASSERT_TRUE(std::binary_search(eval.negatives.begin(), eval.negatives.end(), target));
  auto path = shortest_path_edges(f.graph, eval.component, target.lo, target.hi);
  EXPECT_TRUE(std::any_of(path.begin(), path.end(), [&](NodePair e) { return false_edges.contains(e); }));
  auto cand = engine.select_candidate_edges(eval, 0);
  for (auto e : path) EXPECT_NE(std::find(cand.begin(), cand.end(), e), cand.end());
}

TEST(Engine, RecoveryRestoresEdgeWhoseNewPairsAllMatch) {
  auto ds = make_dataset({"r16", "r17", "r18", "r19"});
  std::unordered_map<std::string, std::string> truth{{"r16", "E"}, {"r17", "E"}, {"r18", "E"}, {"r19", "E"}};
  MatchingGraph g(ds);
  g.add_edge(g.pair_of("r16", "r17"));
  g.add_edge(g.pair_of("r17", "r18"));
  g.add_edge(g.pair_of("r16", "r18"));
  g.add_edge(g.pair_of("r17", "r19"), EdgeState::RemovedUnlabeled, 0.8);
  SimulatedMatcherSpec spec;
  spec.ground_truth = truth;
  SimulatedMatcher m(spec);
  auto config = fixture_config();
  config.lb_total = 0;
  auto oracle = truth_oracle(truth, config);
  CleanupEngine engine(g, m, *oracle, config);
  engine.edge_recovery();
  EXPECT_TRUE(engine.graph().is_live(g.pair_of("r17", "r19")));
  EXPECT_EQ(engine.graph().live_edges().at(g.pair_of("r17", "r19")).state, EdgeState::PredictedMatch);
  EXPECT_EQ(oracle->ledger().spent_total(), 0u);
}

TEST(Engine, RecoveryKeepsEdgeOutWhenANewPairIsNegative) {
  auto ds = make_dataset({"r16", "r17", "r18", "r19"});
  std::unordered_map<std::string, std::string> truth{{"r16", "E"}, {"r17", "E"}, {"r18", "F"}, {"r19", "E"}};
  MatchingGraph g(ds);
  g.add_edge(g.pair_of("r17", "r18"));
  g.add_edge(g.pair_of("r17", "r19"), EdgeState::RemovedUnlabeled, 0.8);
  SimulatedMatcherSpec spec;
  spec.ground_truth = truth;
  spec.overrides[RecordPair("r17", "r18")] = Label::Match;
  SimulatedMatcher m(spec);
  auto config = fixture_config();
  config.lb_total = 0;
  auto oracle = truth_oracle(truth, config);
  CleanupEngine engine(g, m, *oracle, config);
  engine.edge_recovery();
  EXPECT_TRUE(engine.graph().in_pool(g.pair_of("r17", "r19")));
}

TEST(Engine, RecoveryBetweenSingletonsNeedsBudget) {
  auto ds = make_dataset({"a", "b"});
  std::unordered_map<std::string, std::string> truth{{"a", "E"}, {"b", "E"}};
  for (std::size_t budget : {0u, 2u}) {
    MatchingGraph g(ds);
    g.add_edge(NodePair(0, 1), EdgeState::RemovedUnlabeled, 0.9);
    SimulatedMatcherSpec spec;
    spec.ground_truth = truth;
    SimulatedMatcher m(spec);
    auto config = fixture_config();
    config.lb_total = budget;
    auto oracle = truth_oracle(truth, config);
    CleanupEngine engine(g, m, *oracle, config);
    engine.edge_recovery();
    if (budget == 0) {
      EXPECT_TRUE(engine.graph().in_pool(NodePair(0, 1)));
    } else {
      EXPECT_EQ(engine.graph().live_edges().at(NodePair(0, 1)).state, EdgeState::LabeledMatch);
      EXPECT_EQ(oracle->ledger().spent_recovery, 1u);
    }
  }
}

TEST(Engine, CheckpointResumeMatchesUninterruptedRun) {
  auto f = eleven_node_fixture();
  const auto config = fixture_config();

  SimulatedMatcher m1(f.matcher_spec);
  auto o1 = truth_oracle(f.truth, config);
  CleanupEngine full(f.graph, m1, *o1, config);
  full.run();

  SimulatedMatcher m2(f.matcher_spec);
  auto o2 = truth_oracle(f.truth, config);
  CleanupEngine first(f.graph, m2, *o2, config);
  for (int i = 0; i < 3; ++i) first.step();
  const std::string saved = first.checkpoint();

  SimulatedMatcher m3(f.matcher_spec);
  auto o3 = truth_oracle(f.truth, config);
  CleanupEngine resumed(MatchingGraph(f.dataset), m3, *o3, config);
  resumed.restore_checkpoint(saved);
  EXPECT_EQ(resumed.checkpoint(), saved);
  EXPECT_EQ(resumed.cursor().next, 3u);
  resumed.run();
  EXPECT_EQ(resumed.checkpoint(), full.checkpoint());
  EXPECT_EQ(io::graph_json(resumed.graph()), io::graph_json(full.graph()));
  EXPECT_EQ(resumed.reports(), full.reports());
}

TEST(Engine, ReplayedLabelsReproduceTheRun) {
  auto f = eleven_node_fixture();
  const auto config = fixture_config();
  SimulatedMatcher m1(f.matcher_spec);
  auto o1 = truth_oracle(f.truth, config);
  std::vector<LabelRecord> log;
  o1->set_listener([&](const LabelRecord& r) { log.push_back(r); });
  auto first = run_cleanup(f.graph, m1, *o1, config);

  SimulatedMatcher m2(f.matcher_spec);
  Oracle o2(std::make_unique<ReplaySource>(log),
            BudgetLedger::with_defaults(config.lb_total, config.n_iterations, config.safety_factor));
  auto second = run_cleanup(f.graph, m2, o2, config);
  EXPECT_EQ(io::graph_json(second.final_graph), io::graph_json(first.final_graph));
  EXPECT_EQ(io::reports_json(second.reports), io::reports_json(first.reports));
  EXPECT_EQ(second.ledger, first.ledger);
}

TEST(Engine, RejectsInvalidConfig) {
  auto f = eleven_node_fixture();
  SimulatedMatcher m(f.matcher_spec);
  auto config = fixture_config();
  auto oracle = truth_oracle(f.truth, config);
  config.n_iterations = 0;
  EXPECT_THROW(CleanupEngine(f.graph, m, *oracle, config), Error);
  config.n_iterations = 1;
  config.size_threshold = 1;
  EXPECT_THROW(CleanupEngine(f.graph, m, *oracle, config), Error);
}

TEST(Engine, StepNamesAndHooks) {
  auto f = eleven_node_fixture();
  const auto config = fixture_config();
  SimulatedMatcher m(f.matcher_spec);
  auto oracle = truth_oracle(f.truth, config);
  CleanupEngine engine(f.graph, m, *oracle, config);
  std::vector<std::string> steps_seen;
  std::size_t checkpoints = 0;
  engine.on_report([&](const TransitiveReport& r, const MatchingGraph&) { steps_seen.push_back(r.step_name); });
  engine.on_checkpoint([&](const std::string&) { ++checkpoints; });
  std::shared_ptr<const EngineSnapshot> last;
  engine.on_snapshot([&](std::shared_ptr<const EngineSnapshot> s) { last = std::move(s); });
  EXPECT_EQ(engine.next_step_name(), "breakdown");
  engine.run();
  EXPECT_EQ(engine.next_step_name(), "done");
  EXPECT_EQ(checkpoints, config.n_iterations + 3);
  EXPECT_EQ(steps_seen.size(), engine.reports().size());
  ASSERT_TRUE(last);
  EXPECT_TRUE(last->done);
  EXPECT_EQ(last->reports.size(), engine.reports().size());
}

TEST(BuildGraph, KeepsOnlyMatches) {
  auto ds = make_dataset({"a", "b", "c"});
  std::vector<PairPrediction> preds{{RecordPair("a", "b"), Label::Match, 0.9},
                                    {RecordPair("b", "c"), Label::NoMatch, 0.1},
                                    {RecordPair("a", "c"), Label::Match, std::nullopt}};
  auto g = build_graph(ds, preds);
  EXPECT_EQ(g.live_edges().size(), 2u);
  EXPECT_EQ(g.live_edges().at(NodePair(0, 1)).origin_score, 0.9);
}

// ---------------------------------------------------------------------------
// Properties over seeded synthetic runs.

struct SyntheticCase {
  MatchingGraph graph;
  std::unordered_map<std::string, std::string> truth;
  SimulatedMatcherSpec spec;
};

SyntheticCase random_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 20 + rng.below(60);
  std::vector<std::string> ids;
  SyntheticCase sc;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("q" + std::to_string(1000 + i));
  for (std::size_t i = 0; i < n; ++i) sc.truth[ids[i]] = "E" + std::to_string(rng.below(n / 3 + 1));
  sc.spec.ground_truth = sc.truth;
  sc.spec.fp_rate = 0.05;
  sc.spec.fn_rate = 0.05;
  sc.spec.noise_seed = seed;
  sc.spec.error_decay = 0.7;
  auto ds = make_dataset(ids);
  SimulatedMatcher m(sc.spec);
  sc.graph = MatchingGraph(ds);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) {
      const bool same = sc.truth[ids[i]] == sc.truth[ids[j]];
      if (!same && !rng.bernoulli(0.15)) continue;  // sparse candidate set
      auto p = m.predict(ids[i], ids[j]);
      if (p.label == Label::Match) sc.graph.add_edge(NodePair(i, j), EdgeState::PredictedMatch, p.score);
    }
  return sc;
}

TEST(EngineProperty, CleanupLeavesUnlabeledComponentsConsistent) {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    auto sc = random_case(seed);
    CleanupConfig c;
    c.n_iterations = 3;
    c.size_threshold = 12;
    c.lb_total = 40;
    c.seed = seed;
    SimulatedMatcher m(sc.spec);
    auto oracle = truth_oracle(sc.truth, c);
    CleanupEngine engine(sc.graph, m, *oracle, c);
    const std::size_t edges = total_edges(sc.graph);
    while (engine.cursor().next <= c.n_iterations + 1) {
      engine.step();
      ASSERT_EQ(total_edges(engine.graph()), edges);
    }
    for (const auto& e : engine.evaluate_components())
      if (!engine.graph().fully_labeled(e.component)) {
        ASSERT_EQ(e.neg, 0u) << "seed " << seed;
      }
    engine.run();
    ASSERT_EQ(total_edges(engine.graph()), edges);

    const auto& l = oracle->ledger();
    ASSERT_LE(l.spent_init, c.lb_total / 2);
    for (auto s : l.spent_per_iteration) ASSERT_LE(s, l.per_iteration_cap);
    ASSERT_LE(l.spent_recovery, l.recovery_budget());
  }
}

// Labeled non-matches never come back as live edges.
TEST(EngineProperty, RejectedEdgesStayRejected) {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    auto sc = random_case(seed);
    CleanupConfig c;
    c.n_iterations = 2;
    c.size_threshold = 10;
    c.lb_total = 30;
    c.seed = seed;
    SimulatedMatcher m(sc.spec);
    auto oracle = truth_oracle(sc.truth, c);
    auto result = run_cleanup(sc.graph, m, *oracle, c);
    for (const auto& [pair, rec] : oracle->store().current()) {
      if (rec.label != Label::NoMatch) continue;
      auto p = result.final_graph.pair_of(pair.first, pair.second);
      ASSERT_FALSE(result.final_graph.is_live(p));
    }
  }
}

TEST(EngineStandard, TotalNegNonIncreasingOverIterations) {
  const auto& f = testing::standard_fixture();
  auto spec = testing::standard_matcher_spec(f, 1);
  SimulatedMatcher m(spec);
  auto g = testing::standard_graph(f, m);
  auto c = testing::standard_config(1);
  auto oracle = truth_oracle(f.truth.assignment, c);
  auto result = run_cleanup(g, m, *oracle, c);
  ASSERT_EQ(result.reports.size(), c.n_iterations + 4);
  for (std::size_t i = 3; i < 2 + c.n_iterations; ++i)
    EXPECT_LE(result.reports[i].total_neg, result.reports[i - 1].total_neg) << result.reports[i].step_name;
}

}  // namespace
}  // namespace fpclean
