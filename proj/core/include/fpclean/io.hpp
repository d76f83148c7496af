#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpclean/blocker.hpp"
#include "fpclean/engine.hpp"
#include "fpclean/eval.hpp"
#include "fpclean/matcher.hpp"
#include "fpclean/oracle.hpp"
#include "fpclean/synthgen.hpp"

// File formats. Every document starts with a header naming the format and
// its major version, {"format":"fpclean.<kind>","version":1}: as the first
// line of newline-delimited files, as the leading keys of JSON documents, and
// as a `# format=fpclean.groundtruth version=1` comment line in the ground
// truth CSV. Readers reject other formats and other major versions with
// Error(InvalidInput). Writers are deterministic: equal inputs give equal bytes.
namespace fpclean::io {

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename, so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Dataset: header line, then one record object per line in record_id order.
std::string dataset_ndjson(const Dataset& ds);
Dataset parse_dataset(std::string_view text);

struct CsvIngestOptions {
  std::string id_column = "record_id";
  std::string source_column = "source_id";  // optional column; missing -> ""
};

/// RFC 4180 CSV with a header row. Columns other than id and source become
/// attributes in header order. Throws InvalidInput on duplicate ids.
Dataset ingest_csv(std::string_view text, const CsvIngestOptions& options = {});
/// One object per line, no header. `attributes` may be a [[k, v], ...] list
/// or an object; without it, every other key becomes an attribute.
Dataset ingest_ndjson(std::string_view text);

// Ground truth: `record_id,entity_id` rows, sorted by record_id on write.
std::string ground_truth_csv(const GroundTruth& gt);
GroundTruth parse_ground_truth(std::string_view text);

// Candidate pairs: {"a","b","overlap","rank_a","rank_b"} per line.
std::string candidates_ndjson(std::span<const CandidatePair> pairs);
std::vector<CandidatePair> parse_candidates(std::string_view text);

// Edge file: matcher predictions {"a","b","label","score"} per line.
std::string edges_ndjson(std::span<const PairPrediction> predictions);
std::vector<PairPrediction> parse_edges(std::string_view text);

// Label log: header line, then one label event per line in ts order.
std::string label_log_header();
std::string label_line(const LabelRecord& rec);  // no trailing newline
std::string label_log(std::span<const LabelRecord> records);
std::vector<LabelRecord> parse_label_log(std::string_view text);

std::string graph_json(const MatchingGraph& g);
MatchingGraph parse_graph(std::string_view text, DatasetPtr dataset);

std::string report_json(const TransitiveReport& r);  // single report object, no header
std::string reports_json(std::span<const TransitiveReport> reports);
std::vector<TransitiveReport> parse_reports(std::string_view text);

std::string ledger_json(const BudgetLedger& l);
BudgetLedger parse_ledger(std::string_view text);

std::string synth_spec_json(const SynthSpec& spec);
/// Keys missing from the document keep their SynthSpec defaults.
SynthSpec parse_synth_spec(std::string_view text);

/// Component membership after one step: the non-singleton components as
/// sorted record id lists. Enough to recompute closure scores per step.
struct StepPartition {
  std::string step_name;
  std::vector<std::vector<std::string>> components;

  friend bool operator==(const StepPartition&, const StepPartition&) = default;
};

StepPartition partition_of(const MatchingGraph& g, std::string step_name);
/// A star per component; its clique closure equals the partition's.
MatchingGraph graph_from_partition(const StepPartition& p, DatasetPtr dataset);
std::string step_partition_header();
std::string step_partition_line(const StepPartition& p);  // no trailing newline
std::vector<StepPartition> parse_step_partitions(std::string_view text);

}  // namespace fpclean::io
