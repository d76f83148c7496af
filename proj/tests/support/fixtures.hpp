#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fpclean/engine.hpp"
#include "fpclean/matcher.hpp"
#include "fpclean/oracle.hpp"
#include "fpclean/record.hpp"

namespace fpclean::testing {

inline DatasetPtr make_dataset(const std::vector<std::string>& ids) {
  std::vector<Record> records;
  for (const auto& id : ids) records.push_back({id, "s" + id, {{"name", id}}});
  return std::make_shared<const Dataset>(std::move(records));
}

/// Eleven records: entities {r01..r04}, {r05}, {r06..r08}, {r09..r11}.
/// Zero-padded ids keep record order equal to the numeric order.
struct ElevenNodeFixture {
  DatasetPtr dataset;
  std::unordered_map<std::string, std::string> truth;
  std::vector<std::pair<std::string, std::string>> true_edges;
  std::vector<std::pair<std::string, std::string>> false_edges;
  SimulatedMatcherSpec matcher_spec;
  MatchingGraph graph;
};

inline std::string rid(int n) { return (n < 10 ? "r0" : "r") + std::to_string(n); }

inline ElevenNodeFixture eleven_node_fixture() {
  ElevenNodeFixture f;
  std::vector<std::string> ids;
  for (int i = 1; i <= 11; ++i) ids.push_back(rid(i));
  f.dataset = make_dataset(ids);
  auto entity = [](int i) {
    if (i <= 4) return std::string("A");
    if (i == 5) return std::string("E");
    if (i <= 8) return std::string("B");
    return std::string("C");
  };
  for (int i = 1; i <= 11; ++i) f.truth[rid(i)] = entity(i);
  // (r01,r04) is left out: it is the transitive match inside entity A.
  for (auto [a, b] : std::vector<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 3}, {2, 4}, {3, 4}, {6, 7}, {6, 8}, {7, 8},
                                                       {9, 10}, {9, 11}, {10, 11}})
    f.true_edges.emplace_back(rid(a), rid(b));
  for (auto [a, b] : std::vector<std::pair<int, int>>{{2, 9}, {4, 9}, {3, 6}, {4, 6}, {1, 5}, {2, 5}})
    f.false_edges.emplace_back(rid(a), rid(b));

  f.matcher_spec.ground_truth = f.truth;
  for (const auto& [a, b] : f.false_edges) f.matcher_spec.overrides[RecordPair(a, b)] = Label::Match;

  f.graph = MatchingGraph(f.dataset);
  SimulatedMatcher m(f.matcher_spec);
  for (const auto& [a, b] : f.true_edges) f.graph.add_edge(f.graph.pair_of(a, b), EdgeState::PredictedMatch, m.predict(a, b).score);
  for (const auto& [a, b] : f.false_edges) f.graph.add_edge(f.graph.pair_of(a, b), EdgeState::PredictedMatch, m.predict(a, b).score);
  return f;
}

}  // namespace fpclean::testing
