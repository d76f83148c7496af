#include "fpclean/eval.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "fpclean/error.hpp"

namespace fpclean {

namespace {

std::uint64_t choose2(std::uint64_t k) { return k * (k - 1) / 2; }

// Entity of each node; unassigned records get a private entity id.
std::vector<std::uint32_t> entity_ids(const MatchingGraph& g, const GroundTruth& gt) {
  std::unordered_map<std::string, std::uint32_t> ids;
  std::vector<std::uint32_t> out(g.node_count());
  std::uint32_t next = 0;
  for (NodeId n = 0; n < g.node_count(); ++n) {
    auto it = gt.assignment.find(g.id_of(n));
    if (it == gt.assignment.end()) {
      out[n] = next++;
      continue;
    }
    auto [slot, inserted] = ids.emplace(it->second, next);
    if (inserted) ++next;
    out[n] = slot->second;
  }
  return out;
}

MatchingScore finish(Scope scope, std::uint64_t tp, std::uint64_t predicted, std::uint64_t truth_pairs) {
  MatchingScore s;
  s.scope = scope;
  s.tp = tp;
  s.fp = predicted - tp;
  s.fn = truth_pairs - tp;
  s.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
  s.recall = truth_pairs == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(truth_pairs);
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace

std::uint64_t GroundTruth::total_pairs() const {
  std::unordered_map<std::string, std::uint64_t> sizes;
  for (const auto& [rec, ent] : assignment) ++sizes[ent];
  std::uint64_t total = 0;
  for (const auto& [ent, k] : sizes) total += choose2(k);
  return total;
}

bool GroundTruth::same_entity(const std::string& a, const std::string& b) const {
  auto ia = assignment.find(a);
  auto ib = assignment.find(b);
  return ia != assignment.end() && ib != assignment.end() && ia->second == ib->second;
}

std::string_view to_string(Scope s) noexcept {
  return s == Scope::PairwiseOnly ? "pairwise_only" : "with_transitive";
}

MatchingScore score(const MatchingGraph& g, const GroundTruth& gt, Scope scope) {
  const auto entity = entity_ids(g, gt);
  // Truth pairs are counted over the records known to the graph.
  std::unordered_map<std::uint32_t, std::uint64_t> entity_size;
  for (NodeId n = 0; n < g.node_count(); ++n) ++entity_size[entity[n]];
  std::uint64_t truth_pairs = 0;
  for (const auto& [e, k] : entity_size) truth_pairs += choose2(k);

  if (scope == Scope::PairwiseOnly) {
    std::uint64_t tp = 0;
    for (const auto& [p, e] : g.live_edges())
      if (entity[p.lo] == entity[p.hi]) ++tp;
    return finish(scope, tp, g.live_edges().size(), truth_pairs);
  }

  const auto comp = g.component_index();
  std::map<std::pair<NodeId, std::uint32_t>, std::uint64_t> group;
  std::unordered_map<NodeId, std::uint64_t> comp_size;
  for (NodeId n = 0; n < g.node_count(); ++n) {
    ++group[{comp[n], entity[n]}];
    ++comp_size[comp[n]];
  }
  std::uint64_t predicted = 0;
  for (const auto& [c, k] : comp_size) predicted += choose2(k);
  std::uint64_t tp = 0;
  for (const auto& [key, k] : group) tp += choose2(k);
  return finish(scope, tp, predicted, truth_pairs);
}

RemovalStats removal_stats(const MatchingGraph& before, const MatchingGraph& after, const GroundTruth& gt) {
  if (before.node_count() != after.node_count())
    throw Error(ErrorCode::InvalidInput, "removal stats need graphs over the same records");
  const auto entity = entity_ids(before, gt);
  const auto cb = before.component_index();
  const auto ca = after.component_index();

  // Pairs kept = pairs sharing a component both before and after.
  std::map<std::tuple<NodeId, NodeId, std::uint32_t>, std::uint64_t> kept_same;
  std::map<std::pair<NodeId, NodeId>, std::uint64_t> kept_all;
  std::map<std::pair<NodeId, std::uint32_t>, std::uint64_t> before_same;
  std::unordered_map<NodeId, std::uint64_t> before_all;
  for (NodeId n = 0; n < before.node_count(); ++n) {
    ++kept_same[{cb[n], ca[n], entity[n]}];
    ++kept_all[{cb[n], ca[n]}];
    ++before_same[{cb[n], entity[n]}];
    ++before_all[cb[n]];
  }
  RemovalStats s;
  std::uint64_t before_pairs = 0, kept_tp = 0, kept_pairs = 0;
  for (const auto& [k, v] : before_same) s.tp_before += choose2(v);
  for (const auto& [k, v] : before_all) before_pairs += choose2(v);
  for (const auto& [k, v] : kept_same) kept_tp += choose2(v);
  for (const auto& [k, v] : kept_all) kept_pairs += choose2(v);
  s.fp_before = before_pairs - s.tp_before;
  s.tp_removed = s.tp_before - kept_tp;
  s.fp_removed = s.fp_before - (kept_pairs - kept_tp);
  s.tp_removed_pct = s.tp_before == 0 ? 0.0 : 100.0 * static_cast<double>(s.tp_removed) / static_cast<double>(s.tp_before);
  s.fp_removed_pct = s.fp_before == 0 ? 0.0 : 100.0 * static_cast<double>(s.fp_removed) / static_cast<double>(s.fp_before);
  return s;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::InsufficientSeries, "correlation needs two equal-length series of at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

ProxyCorrelation proxy_correlation(std::span<const TransitiveReport> reports, std::span<const TruthPoint> truth) {
  if (reports.size() != truth.size() || reports.size() < 2)
    throw Error(ErrorCode::InsufficientSeries, "proxy correlation needs matching series of at least two steps");
  std::vector<double> pos, neg, tp, fp;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    pos.push_back(static_cast<double>(reports[i].total_pos));
    neg.push_back(static_cast<double>(reports[i].total_neg));
    tp.push_back(static_cast<double>(truth[i].tp));
    fp.push_back(static_cast<double>(truth[i].fp));
  }
  return {pearson(pos, tp), pearson(neg, fp)};
}

ProxyCorrelation cleanup_proxy_correlation(std::span<const TransitiveReport> reports,
                                           std::span<const TruthPoint> truth) {
  if (reports.size() != truth.size())
    throw Error(ErrorCode::InsufficientSeries, "proxy correlation needs one truth point per report");
  const std::size_t skip = !reports.empty() && reports.front().step_name == "pre_cleanup" ? 1 : 0;
  return proxy_correlation(reports.subspan(skip), truth.subspan(skip));
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace fpclean
