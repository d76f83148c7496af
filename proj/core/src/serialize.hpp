#pragma once

// JSON forms shared by the file formats and the engine checkpoint.

#include <nlohmann/json.hpp>

#include "fpclean/engine.hpp"
#include "fpclean/graph.hpp"
#include "fpclean/oracle.hpp"

namespace fpclean::detail {

using ojson = nlohmann::ordered_json;

ojson graph_to_json(const MatchingGraph& g);
/// Edges are matched to `dataset` by record id.
MatchingGraph graph_from_json(const nlohmann::json& j, DatasetPtr dataset);

ojson report_to_json(const TransitiveReport& r);
TransitiveReport report_from_json(const nlohmann::json& j);

ojson ledger_to_json(const BudgetLedger& l);
BudgetLedger ledger_from_json(const nlohmann::json& j);

ojson label_to_json(const LabelRecord& r);
LabelRecord label_from_json(const nlohmann::json& j);

/// Throws InvalidInput unless `j` names `format` with major version 1.
void expect_header(const nlohmann::json& j, std::string_view format);
ojson header(std::string_view format);

}  // namespace fpclean::detail
