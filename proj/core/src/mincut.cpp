#include "fpclean/mincut.hpp"

#include <algorithm>
#include <limits>

#include "fpclean/error.hpp"

namespace fpclean {

namespace {

using EdgeList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

std::pair<std::uint32_t, std::uint32_t> normalized(std::pair<std::uint32_t, std::uint32_t> e) {
  return e.first < e.second ? e : std::make_pair(e.second, e.first);
}

}  // namespace

std::vector<std::size_t> global_min_cut(const SimpleGraph& g) {
  const std::size_t n = g.node_count;
  if (n < 2) throw Error(ErrorCode::DegenerateComponent, "minimum cut needs at least two nodes");

  std::vector<std::vector<long>> weight(n, std::vector<long>(n, 0));
  for (auto [u, v] : g.edges) {
    if (u >= n || v >= n) throw Error(ErrorCode::InvalidInput, "edge endpoint out of range");
    if (u == v) continue;
    ++weight[u][v];
    ++weight[v][u];
  }

  std::vector<std::vector<std::uint32_t>> groups(n);
  for (std::uint32_t i = 0; i < n; ++i) groups[i] = {i};
  std::vector<std::uint32_t> active(n);
  for (std::uint32_t i = 0; i < n; ++i) active[i] = i;

  long best = std::numeric_limits<long>::max();
  std::vector<std::vector<std::uint32_t>> tied_sides;

  std::vector<long> key(n);
  std::vector<char> added(n);
  while (active.size() > 1) {
    for (auto v : active) {
      key[v] = 0;
      added[v] = 0;
    }
    std::uint32_t prev = active.front();
    std::uint32_t last = active.front();
    for (std::size_t step = 0; step < active.size(); ++step) {
      // Most tightly connected vertex; ties go to the lowest index.
      std::uint32_t pick = n;
      for (auto v : active) {
        if (added[v]) continue;
        if (pick == n || key[v] > key[pick]) pick = v;
      }
      added[pick] = 1;
      prev = last;
      last = pick;
      for (auto v : active)
        if (!added[v]) key[v] += weight[pick][v];
    }

    const long cut = key[last];
    if (cut < best) {
      best = cut;
      tied_sides.clear();
    }
    if (cut == best) tied_sides.push_back(groups[last]);

    for (auto v : active) {
      weight[prev][v] += weight[last][v];
      weight[v][prev] = weight[prev][v];
    }
    weight[prev][prev] = 0;
    groups[prev].insert(groups[prev].end(), groups[last].begin(), groups[last].end());
    active.erase(std::find(active.begin(), active.end(), last));
  }

  // A cut that detaches a single node is preferred: the lowest-index node
  // whose degree equals the connectivity, as degree-first search finds it.
  std::vector<long> degree(n, 0);
  for (auto [u, v] : g.edges) {
    if (u == v) continue;
    ++degree[u];
    ++degree[v];
  }
  for (std::uint32_t v = 0; v < n; ++v) {
    if (degree[v] != best) continue;
    std::vector<std::size_t> star;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      auto [a, b] = g.edges[i];
      if (a != b && (a == v || b == v)) star.push_back(i);
    }
    return star;
  }

  std::vector<std::size_t> chosen;
  EdgeList chosen_pairs;
  bool have = false;
  std::vector<char> side(n);
  for (const auto& members : tied_sides) {
    std::fill(side.begin(), side.end(), 0);
    for (auto m : members) side[m] = 1;
    std::vector<std::size_t> cut;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      auto [u, v] = g.edges[i];
      if (u != v && side[u] != side[v]) cut.push_back(i);
    }
    std::sort(cut.begin(), cut.end(), [&](std::size_t a, std::size_t b) {
      auto pa = normalized(g.edges[a]);
      auto pb = normalized(g.edges[b]);
      return pa != pb ? pa < pb : a < b;
    });
    EdgeList pairs;
    pairs.reserve(cut.size());
    for (auto i : cut) pairs.push_back(normalized(g.edges[i]));
    if (!have || pairs < chosen_pairs) {
      have = true;
      chosen = std::move(cut);
      chosen_pairs = std::move(pairs);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace fpclean
