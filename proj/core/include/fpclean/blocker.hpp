#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpclean/eval.hpp"
#include "fpclean/record.hpp"

namespace fpclean {

/// Lowercased alphanumeric runs. ASCII, Latin-1, Latin Extended-A, Greek
/// and Cyrillic capitals are folded; diacritics are kept. Other non-ASCII
/// letters count as alphanumeric and pass through unchanged.
std::vector<std::string> tokenize(std::string_view text);
/// Tokens of all attribute values, in attribute order.
std::vector<std::string> tokenize(const Record& r);

struct BlockerOptions {
  std::size_t k = 10;
  /// Tokens in more than max(stop_fraction * N, min_stop_df) records are
  /// ignored when counting overlap.
  double stop_fraction = 0.2;
  std::size_t min_stop_df = 10;
};

/// Distinct token ids per record (sorted) plus document frequencies.
struct TokenTable {
  std::vector<std::string> vocabulary;
  std::vector<std::vector<std::uint32_t>> record_tokens;  // aligned with the dataset
  std::vector<std::uint32_t> df;
  std::vector<char> stop;
};

TokenTable build_token_table(const Dataset& ds, const BlockerOptions& options);

struct CandidatePair {
  RecordPair pair;
  std::uint32_t overlap = 0;
  std::uint32_t rank_for_a = 0;  // 1-based rank of pair.second among pair.first's picks, 0 if not picked
  std::uint32_t rank_for_b = 0;

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

/// Every record contributes its k highest-overlap partners (ties by
/// record_id); the union is returned sorted by pair.
std::vector<CandidatePair> block_top_k(const Dataset& ds, const BlockerOptions& options = {});

struct BlockingRecall {
  std::uint64_t found = 0;
  std::uint64_t total = 0;
  double recall = 0;
};

BlockingRecall blocking_recall(std::span<const CandidatePair> pairs, const GroundTruth& gt);

}  // namespace fpclean
