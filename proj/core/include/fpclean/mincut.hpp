#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace fpclean {

/// Undirected multigraph on nodes 0..node_count-1. Parallel edges are
/// allowed and each counts once towards a cut.
struct SimpleGraph {
  std::size_t node_count = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

/// Global minimum edge cut (Stoer-Wagner over unit edge weights).
/// Returns indices into `g.edges`, sorted. If some node's degree equals the
/// minimum cut size, the edges of the lowest-index such node are the cut.
/// Otherwise, among equal-size cuts produced by the contraction phases, the
/// one whose sorted (lo, hi) edge list is lexicographically smallest wins.
/// Requires node_count >= 2; a disconnected graph yields an empty cut.
std::vector<std::size_t> global_min_cut(const SimpleGraph& g);

}  // namespace fpclean
