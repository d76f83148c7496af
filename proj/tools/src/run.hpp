#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "manifest.hpp"

namespace fpclean::cli {

struct RunOptions {
  RunManifest manifest;
  std::string command = "clean";
  /// Continue from output_dir/checkpoint.json; labels logged after it are
  /// answered from the log instead of the oracle.
  bool resume = false;
  std::optional<std::size_t> halt_after_labels;
  std::optional<int> port;  // serve the HTTP API while running
  std::string host = "127.0.0.1";
  bool linger = false;      // keep serving after the run until SIGINT/SIGTERM
};

struct RunOutcome {
  BudgetLedger ledger;
  std::size_t live_edges = 0;
  std::size_t steps = 0;
  std::size_t labels = 0;
};

/// Runs the cleanup and writes graph.json, reports.json, ledger.json,
/// labels.ndjson, steps.ndjson, checkpoint.json and run_meta.json (the only
/// file with wall-clock times) into the output directory. When serving,
/// prints {"listening":<port>} as the first line of `out`.
RunOutcome run_clean(const RunOptions& options, std::ostream& out);

}  // namespace fpclean::cli
