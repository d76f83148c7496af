#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fpclean/engine.hpp"
#include "fpclean/graph.hpp"

namespace fpclean {

/// record_id -> entity_id. Records without an entry count as singletons.
struct GroundTruth {
  std::unordered_map<std::string, std::string> assignment;

  /// Sum over entities of k(k-1)/2.
  std::uint64_t total_pairs() const;
  bool same_entity(const std::string& a, const std::string& b) const;
};

enum class Scope : std::uint8_t { PairwiseOnly, WithTransitive };
std::string_view to_string(Scope s) noexcept;

struct MatchingScore {
  Scope scope = Scope::WithTransitive;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;  // 2PR/(P+R), 0 when P+R == 0
};

/// PairwiseOnly scores the live edges; WithTransitive the clique closure.
/// Counted per (component, entity) group, so large closures are never
/// materialized.
MatchingScore score(const MatchingGraph& g, const GroundTruth& gt, Scope scope);

struct RemovalStats {
  double tp_removed_pct = 0;
  double fp_removed_pct = 0;
  std::uint64_t tp_before = 0;
  std::uint64_t fp_before = 0;
  std::uint64_t tp_removed = 0;
  std::uint64_t fp_removed = 0;
};

/// Fractions of the closure pairs of `before` (split into true and false
/// positives) that are no longer implied by `after`. Both graphs must share
/// the same dataset.
RemovalStats removal_stats(const MatchingGraph& before, const MatchingGraph& after, const GroundTruth& gt);

struct TruthPoint {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
};

struct ProxyCorrelation {
  std::optional<double> pos_vs_tp;  // nullopt when either series is constant
  std::optional<double> neg_vs_fp;
};

/// Pearson correlation across steps. Throws InsufficientSeries when the
/// series differ in length or hold fewer than two points.
ProxyCorrelation proxy_correlation(std::span<const TransitiveReport> reports, std::span<const TruthPoint> truth);

/// The same over the cleanup steps only. The pre_cleanup report is skipped:
/// it is taken before components above S are dissolved, so its counts come
/// from sampled pairs and are not on the scale of the later steps.
ProxyCorrelation cleanup_proxy_correlation(std::span<const TransitiveReport> reports,
                                           std::span<const TruthPoint> truth);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Percent with two decimals, as printed in reports.
std::string format_percent(double fraction);

}  // namespace fpclean
