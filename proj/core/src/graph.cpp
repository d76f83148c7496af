#include "fpclean/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "fpclean/error.hpp"
#include "fpclean/mincut.hpp"
#include "fpclean/random.hpp"

namespace fpclean {

std::string_view to_string(EdgeState state) noexcept {
  switch (state) {
    case EdgeState::PredictedMatch: return "predicted";
    case EdgeState::LabeledMatch: return "labeled_match";
    case EdgeState::LabeledNonMatch: return "labeled_nonmatch";
    case EdgeState::RemovedUnlabeled: return "removed";
  }
  return "predicted";
}

std::optional<EdgeState> parse_edge_state(std::string_view text) noexcept {
  if (text == "predicted") return EdgeState::PredictedMatch;
  if (text == "labeled_match") return EdgeState::LabeledMatch;
  if (text == "labeled_nonmatch") return EdgeState::LabeledNonMatch;
  if (text == "removed") return EdgeState::RemovedUnlabeled;
  return std::nullopt;
}

bool Component::contains(NodeId n) const { return std::binary_search(nodes.begin(), nodes.end(), n); }

std::size_t Component::transitive_count() const noexcept {
  const std::size_t k = nodes.size();
  return k * (k - 1) / 2 - edges.size();
}

MatchingGraph::MatchingGraph(DatasetPtr dataset)
    : dataset_(std::move(dataset)), adjacency_(dataset_ ? dataset_->size() : 0) {}

NodePair MatchingGraph::pair_of(std::string_view a, std::string_view b) const {
  auto ia = dataset_->index_of(a);
  auto ib = dataset_->index_of(b);
  if (ia == ib) throw Error(ErrorCode::InvalidInput, "self pair: " + std::string(a));
  return NodePair(ia, ib);
}

void MatchingGraph::link(NodePair e) {
  auto& la = adjacency_[e.lo];
  la.insert(std::lower_bound(la.begin(), la.end(), e.hi), e.hi);
  auto& lb = adjacency_[e.hi];
  lb.insert(std::lower_bound(lb.begin(), lb.end(), e.lo), e.lo);
}

void MatchingGraph::unlink(NodePair e) {
  auto& la = adjacency_[e.lo];
  la.erase(std::lower_bound(la.begin(), la.end(), e.hi));
  auto& lb = adjacency_[e.hi];
  lb.erase(std::lower_bound(lb.begin(), lb.end(), e.lo));
}

void MatchingGraph::add_edge(NodePair e, EdgeState state, std::optional<double> score) {
  if (e.lo == e.hi || e.hi >= node_count())
    throw Error(ErrorCode::InvalidInput, "invalid edge endpoints");
  if (live_.contains(e) || pool_.contains(e) || rejected_.contains(e))
    throw Error(ErrorCode::InvalidInput, "duplicate edge " + id_of(e.lo) + "-" + id_of(e.hi));
  switch (state) {
    case EdgeState::PredictedMatch:
    case EdgeState::LabeledMatch:
      live_.emplace(e, Edge{state, score});
      link(e);
      break;
    case EdgeState::RemovedUnlabeled: pool_.emplace(e, Edge{state, score}); break;
    case EdgeState::LabeledNonMatch: rejected_.emplace(e, Edge{state, score}); break;
  }
}

std::size_t MatchingGraph::count_new_components(std::span<const NodePair> removed) const {
  // Number of distinct components now spanned by the endpoints of the
  // removed edges, minus the ones they spanned before (one per connected
  // group of removed edges, found by union over the removed set + live graph).
  std::unordered_map<NodeId, NodeId> label;
  std::size_t after = 0;
  for (const auto& e : removed) {
    for (NodeId start : {e.lo, e.hi}) {
      if (label.contains(start)) continue;
      ++after;
      std::deque<NodeId> queue{start};
      label[start] = start;
      while (!queue.empty()) {
        NodeId u = queue.front();
        queue.pop_front();
        for (NodeId v : adjacency_[u]) {
          if (label.emplace(v, start).second) queue.push_back(v);
        }
      }
    }
  }
  // Before the removal, the removed edges themselves glued these groups.
  std::unordered_map<NodeId, NodeId> parent;
  auto find = [&](NodeId x) {
    while (parent.contains(x) && parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [node, root] : label) parent.emplace(root, root);
  std::size_t before = after;
  for (const auto& e : removed) {
    NodeId a = find(label[e.lo]);
    NodeId b = find(label[e.hi]);
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
      --before;
    }
  }
  return after - before;
}

MutationDelta MatchingGraph::remove_to_pool(std::span<const NodePair> edges) {
  MutationDelta delta;
  for (const auto& e : edges) {
    auto it = live_.find(e);
    if (it == live_.end()) continue;
    Edge moved = it->second;
    moved.state = EdgeState::RemovedUnlabeled;
    live_.erase(it);
    unlink(e);
    pool_.emplace(e, moved);
    delta.edges.push_back(e);
  }
  delta.components_added = count_new_components(delta.edges);
  return delta;
}

MutationDelta MatchingGraph::reject(std::span<const NodePair> edges) {
  MutationDelta delta;
  std::vector<NodePair> unlinked;
  for (const auto& e : edges) {
    Edge moved;
    if (auto it = live_.find(e); it != live_.end()) {
      moved = it->second;
      live_.erase(it);
      unlink(e);
      unlinked.push_back(e);
    } else if (auto pit = pool_.find(e); pit != pool_.end()) {
      moved = pit->second;
      pool_.erase(pit);
    } else {
      continue;
    }
    moved.state = EdgeState::LabeledNonMatch;
    rejected_.emplace(e, moved);
    delta.edges.push_back(e);
  }
  delta.components_added = count_new_components(unlinked);
  return delta;
}

void MatchingGraph::restore(NodePair e, EdgeState state) {
  auto it = pool_.find(e);
  if (it == pool_.end()) throw Error(ErrorCode::InvalidInput, "edge not in removed pool");
  if (state != EdgeState::PredictedMatch && state != EdgeState::LabeledMatch)
    throw Error(ErrorCode::InvalidInput, "restored edge must be a live state");
  Edge moved = it->second;
  moved.state = state;
  pool_.erase(it);
  live_.emplace(e, moved);
  link(e);
}

void MatchingGraph::mark_labeled_match(NodePair e) {
  auto it = live_.find(e);
  if (it == live_.end()) throw Error(ErrorCode::InvalidInput, "edge not live");
  it->second.state = EdgeState::LabeledMatch;
}

std::vector<Component> MatchingGraph::components() const {
  std::vector<Component> out;
  std::vector<char> seen(node_count(), 0);
  std::vector<NodeId> stack;
  for (NodeId start = 0; start < node_count(); ++start) {
    if (seen[start] || adjacency_[start].empty()) continue;
    Component c;
    c.id = start;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      c.nodes.push_back(u);
      for (NodeId v : adjacency_[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    std::sort(c.nodes.begin(), c.nodes.end());
    for (NodeId u : c.nodes)
      for (NodeId v : adjacency_[u])
        if (v > u) c.edges.emplace_back(u, v);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<NodeId> MatchingGraph::component_index() const {
  std::vector<NodeId> index(node_count());
  std::iota(index.begin(), index.end(), NodeId{0});
  for (const auto& c : components())
    for (NodeId n : c.nodes) index[n] = c.id;
  return index;
}

Component MatchingGraph::component_of(NodeId n) const {
  Component c;
  std::unordered_set<NodeId> seen{n};
  std::vector<NodeId> stack{n};
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    c.nodes.push_back(u);
    for (NodeId v : adjacency_[u])
      if (seen.insert(v).second) stack.push_back(v);
  }
  std::sort(c.nodes.begin(), c.nodes.end());
  c.id = c.nodes.front();
  for (NodeId u : c.nodes)
    for (NodeId v : adjacency_[u])
      if (v > u) c.edges.emplace_back(u, v);
  return c;
}

bool MatchingGraph::fully_labeled(const Component& c) const {
  return std::all_of(c.edges.begin(), c.edges.end(), [&](NodePair e) {
    auto it = live_.find(e);
    return it != live_.end() && it->second.state == EdgeState::LabeledMatch;
  });
}

std::vector<NodePair> transitive_pairs(const MatchingGraph& g, const Component& c) {
  std::vector<NodePair> out;
  out.reserve(c.transitive_count());
  for (std::size_t i = 0; i < c.nodes.size(); ++i) {
    const auto& adj = g.neighbors(c.nodes[i]);
    auto cursor = adj.begin();
    for (std::size_t j = i + 1; j < c.nodes.size(); ++j) {
      NodeId v = c.nodes[j];
      cursor = std::lower_bound(cursor, adj.end(), v);
      if (cursor != adj.end() && *cursor == v) continue;
      out.emplace_back(c.nodes[i], v);
    }
  }
  return out;
}

std::vector<NodePair> sample_transitive_pairs(const MatchingGraph& g, const Component& c,
                                              std::size_t cap, std::uint64_t seed) {
  if (cap == 0) return {};
  const std::size_t total = c.transitive_count();
  if (total <= cap) return transitive_pairs(g, c);

  Rng rng(mix64(seed) ^ c.id);
  const std::size_t k = c.nodes.size();
  std::vector<NodePair> out;
  if (k * (k - 1) / 2 <= (std::size_t{1} << 22)) {
    auto all = transitive_pairs(g, c);
    for (std::size_t i = 0; i < cap; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(all.size() - i));
      std::swap(all[i], all[j]);
    }
    all.resize(cap);
    out = std::move(all);
  } else {
    std::unordered_set<NodePair, NodePairHash> chosen;
    while (chosen.size() < cap) {
      NodeId a = c.nodes[rng.below(k)];
      NodeId b = c.nodes[rng.below(k)];
      if (a == b) continue;
      NodePair p(a, b);
      const auto& adj = g.neighbors(p.lo);
      if (std::binary_search(adj.begin(), adj.end(), p.hi)) continue;
      chosen.insert(p);
    }
    out.assign(chosen.begin(), chosen.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::uint32_t local_index(const Component& c, NodeId n) {
  return static_cast<std::uint32_t>(std::lower_bound(c.nodes.begin(), c.nodes.end(), n) - c.nodes.begin());
}

}  // namespace

std::vector<NodePair> min_edge_cut(const MatchingGraph& g, const Component& c) {
  return min_edge_cut(g, c, [](NodePair) { return false; });
}

std::vector<NodePair> min_edge_cut(const MatchingGraph& /*g*/, const Component& c,
                                   const std::function<bool(NodePair)>& is_protected) {
  if (c.nodes.size() < 2)
    throw Error(ErrorCode::DegenerateComponent, "component with a single node has no edge cut");

  // Contract protected edges; super nodes are numbered by their smallest
  // member so the numbering follows record order.
  const std::size_t k = c.nodes.size();
  std::vector<std::uint32_t> parent(k);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<NodePair> cuttable;
  for (const auto& e : c.edges) {
    if (is_protected(e)) {
      auto a = find(local_index(c, e.lo));
      auto b = find(local_index(c, e.hi));
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    } else {
      cuttable.push_back(e);
    }
  }
  std::vector<std::uint32_t> super(k);
  std::uint32_t super_count = 0;
  std::vector<std::uint32_t> root_to_super(k, UINT32_MAX);
  for (std::uint32_t i = 0; i < k; ++i) {
    auto r = find(i);
    if (root_to_super[r] == UINT32_MAX) root_to_super[r] = super_count++;
    super[i] = root_to_super[r];
  }
  if (super_count < 2) return {};

  SimpleGraph sg;
  sg.node_count = super_count;
  std::vector<NodePair> kept;
  for (const auto& e : cuttable) {
    auto a = super[local_index(c, e.lo)];
    auto b = super[local_index(c, e.hi)];
    if (a == b) continue;
    sg.edges.emplace_back(a, b);
    kept.push_back(e);
  }
  std::vector<NodePair> cut;
  for (auto i : global_min_cut(sg)) cut.push_back(kept[i]);
  std::sort(cut.begin(), cut.end());
  return cut;
}

std::vector<NodePair> shortest_path_edges(const MatchingGraph& g, const Component& c, NodeId a,
                                          NodeId b) {
  if (!c.contains(a) || !c.contains(b))
    throw Error(ErrorCode::NodeNotInComponent, "path endpoint is not in the component");
  if (a == b) throw Error(ErrorCode::InvalidInput, "path endpoints must differ");

  std::unordered_map<NodeId, NodeId> parent{{a, a}};
  std::deque<NodeId> queue{a};
  while (!queue.empty() && !parent.contains(b)) {
    NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : g.neighbors(u)) {
      if (parent.emplace(v, u).second) queue.push_back(v);
    }
  }
  if (!parent.contains(b)) throw Error(ErrorCode::NodeNotInComponent, "endpoints are not connected");

  std::vector<NodePair> path;
  for (NodeId v = b; v != a; v = parent[v]) path.emplace_back(parent[v], v);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<NodePair> clique_closure(const MatchingGraph& g) {
  std::vector<NodePair> out;
  for (const auto& c : g.components())
    for (std::size_t i = 0; i < c.nodes.size(); ++i)
      for (std::size_t j = i + 1; j < c.nodes.size(); ++j) out.emplace_back(c.nodes[i], c.nodes[j]);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t clique_closure_size(const MatchingGraph& g) {
  std::size_t total = 0;
  for (const auto& c : g.components()) total += c.size() * (c.size() - 1) / 2;
  return total;
}

}  // namespace fpclean
