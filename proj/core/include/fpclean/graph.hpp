#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fpclean/record.hpp"

namespace fpclean {

using NodeId = std::uint32_t;

/// Unordered node pair with lo < hi. Used both as edge identity and for
/// transitive pairs. Since node ids follow record_id order, ordering by
/// NodePair is lexicographic by record_id pair.
struct NodePair {
  NodeId lo = 0;
  NodeId hi = 0;

  NodePair() = default;
  NodePair(NodeId a, NodeId b) : lo(a < b ? a : b), hi(a < b ? b : a) {}

  friend auto operator<=>(const NodePair&, const NodePair&) = default;
  friend bool operator==(const NodePair&, const NodePair&) = default;
};

struct NodePairHash {
  std::size_t operator()(NodePair p) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{p.lo} << 32) | p.hi);
  }
};

enum class EdgeState : std::uint8_t { PredictedMatch, LabeledMatch, LabeledNonMatch, RemovedUnlabeled };

std::string_view to_string(EdgeState state) noexcept;
std::optional<EdgeState> parse_edge_state(std::string_view text) noexcept;

struct Edge {
  EdgeState state = EdgeState::PredictedMatch;
  std::optional<double> origin_score;
};

/// A maximal connected subgraph with at least one edge. `id` is its
/// smallest node, which keeps ids stable across recomputation as long as
/// the component itself is unchanged.
struct Component {
  NodeId id = 0;
  std::vector<NodeId> nodes;   // sorted
  std::vector<NodePair> edges; // sorted

  std::size_t size() const noexcept { return nodes.size(); }
  std::size_t edge_count() const noexcept { return edges.size(); }
  bool contains(NodeId n) const;
  /// k(k-1)/2 - m
  std::size_t transitive_count() const noexcept;
};

/// What a mutation did, so callers can log trajectories.
struct MutationDelta {
  std::vector<NodePair> edges;  // edges moved by the call
  std::size_t components_added = 0;
};

/// The matching graph: live edges (predicted or labeled matches), the pool
/// of edges removed without a label, and the ledger of edges labeled as
/// non-matches. Every edge lives in exactly one of the three maps.
class MatchingGraph {
 public:
  MatchingGraph() = default;
  explicit MatchingGraph(DatasetPtr dataset);

  const Dataset& dataset() const noexcept { return *dataset_; }
  const DatasetPtr& dataset_ptr() const noexcept { return dataset_; }
  std::size_t node_count() const noexcept { return adjacency_.size(); }
  const Record& record(NodeId n) const { return (*dataset_)[n]; }
  const std::string& id_of(NodeId n) const { return (*dataset_)[n].record_id; }

  /// Node pair for two record ids; throws InvalidInput if unknown or equal.
  NodePair pair_of(std::string_view a, std::string_view b) const;
  RecordPair record_pair(NodePair p) const { return RecordPair(id_of(p.lo), id_of(p.hi)); }

  /// Inserts a live edge. Throws InvalidInput if the pair is already known
  /// in any state or is a self loop.
  void add_edge(NodePair e, EdgeState state = EdgeState::PredictedMatch,
                std::optional<double> score = std::nullopt);

  bool is_live(NodePair e) const { return live_.contains(e); }
  bool in_pool(NodePair e) const { return pool_.contains(e); }
  bool is_rejected(NodePair e) const { return rejected_.contains(e); }

  const std::map<NodePair, Edge>& live_edges() const noexcept { return live_; }
  const std::map<NodePair, Edge>& removed_pool() const noexcept { return pool_; }
  const std::map<NodePair, Edge>& rejected() const noexcept { return rejected_; }

  /// Live -> removed pool (state RemovedUnlabeled).
  MutationDelta remove_to_pool(std::span<const NodePair> edges);
  /// Live or pooled -> rejected (state LabeledNonMatch).
  MutationDelta reject(std::span<const NodePair> edges);
  /// Pool -> live with the given state.
  void restore(NodePair e, EdgeState state);
  void mark_labeled_match(NodePair e);

  const std::vector<NodeId>& neighbors(NodeId n) const { return adjacency_[n]; }

  /// Components with at least one edge, ordered by smallest node.
  std::vector<Component> components() const;
  /// node -> smallest node of its component (isolated nodes map to themselves).
  std::vector<NodeId> component_index() const;
  Component component_of(NodeId n) const;

  /// True when every live edge of `c` carries a label.
  bool fully_labeled(const Component& c) const;

 private:
  void link(NodePair e);
  void unlink(NodePair e);
  std::size_t count_new_components(std::span<const NodePair> removed) const;

  DatasetPtr dataset_;
  std::vector<std::vector<NodeId>> adjacency_;  // sorted neighbor lists
  std::map<NodePair, Edge> live_;
  std::map<NodePair, Edge> pool_;
  std::map<NodePair, Edge> rejected_;
};

/// Non-adjacent intra-component pairs, sorted.
std::vector<NodePair> transitive_pairs(const MatchingGraph& g, const Component& c);

/// All transitive pairs when there are at most `cap`, else a uniform sample
/// of exactly `cap` of them. Output sorted; reproducible for a fixed seed.
std::vector<NodePair> sample_transitive_pairs(const MatchingGraph& g, const Component& c,
                                              std::size_t cap, std::uint64_t seed);

/// Canonical global minimum edge cut of a component. Throws
/// DegenerateComponent for single-node components.
std::vector<NodePair> min_edge_cut(const MatchingGraph& g, const Component& c);

/// Minimum cut over the edges not marked protected: protected edges are
/// contracted first. Returns an empty set when the protected edges alone
/// connect the component.
std::vector<NodePair> min_edge_cut(const MatchingGraph& g, const Component& c,
                                   const std::function<bool(NodePair)>& is_protected);

/// Edges of one fewest-edge path a -> b (BFS, neighbors in id order).
std::vector<NodePair> shortest_path_edges(const MatchingGraph& g, const Component& c, NodeId a,
                                          NodeId b);

/// All intra-component pairs (live edges plus transitive pairs), sorted.
std::vector<NodePair> clique_closure(const MatchingGraph& g);
std::size_t clique_closure_size(const MatchingGraph& g);

}  // namespace fpclean
