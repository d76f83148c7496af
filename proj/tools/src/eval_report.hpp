#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpclean/eval.hpp"
#include "fpclean/io.hpp"

namespace fpclean::cli {

struct EvalInputs {
  const MatchingGraph* final_graph = nullptr;
  const MatchingGraph* initial_graph = nullptr;          // optional: enables pre scores and removal stats
  const std::vector<TransitiveReport>* reports = nullptr;  // optional, with `steps`: per-step series
  const std::vector<io::StepPartition>* steps = nullptr;
  const GroundTruth* truth = nullptr;
};

struct EvalReport {
  nlohmann::ordered_json json;
  std::string csv;  // per-step series; header only when no steps were given
};

/// Percentages carry two decimals, as printed in result tables.
EvalReport build_eval_report(const EvalInputs& in);

}  // namespace fpclean::cli
