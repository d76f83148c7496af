#include "serialize.hpp"

#include "fpclean/error.hpp"

namespace fpclean::detail {

namespace {

void edges_to(ojson& arr, const MatchingGraph& g, const std::map<NodePair, Edge>& edges) {
  for (const auto& [p, e] : edges) {
    ojson row = ojson::array({g.id_of(p.lo), g.id_of(p.hi), std::string(to_string(e.state))});
    if (e.origin_score) row.push_back(*e.origin_score);
    else row.push_back(nullptr);
    arr.push_back(std::move(row));
  }
}

template <typename T>
T required_enum(std::optional<T> v, std::string_view what) {
  if (!v) throw Error(ErrorCode::InvalidInput, "unknown " + std::string(what));
  return *v;
}

}  // namespace

ojson header(std::string_view format) {
  ojson h;
  h["format"] = std::string("fpclean.") + std::string(format);
  h["version"] = 1;
  return h;
}

void expect_header(const nlohmann::json& j, std::string_view format) {
  const std::string want = std::string("fpclean.") + std::string(format);
  if (!j.is_object() || !j.contains("format") || j["format"] != want)
    throw Error(ErrorCode::InvalidInput, "expected a " + want + " document");
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != 1)
    throw Error(ErrorCode::InvalidInput, "unsupported " + want + " version");
}

ojson graph_to_json(const MatchingGraph& g) {
  ojson j = header("graph");
  j["records"] = g.node_count();
  auto edges = ojson::array();
  edges_to(edges, g, g.live_edges());
  edges_to(edges, g, g.removed_pool());
  edges_to(edges, g, g.rejected());
  j["edges"] = std::move(edges);
  return j;
}

MatchingGraph graph_from_json(const nlohmann::json& j, DatasetPtr dataset) {
  expect_header(j, "graph");
  MatchingGraph g(std::move(dataset));
  try {
    for (const auto& row : j.at("edges")) {
      auto state = required_enum(parse_edge_state(row.at(2).get<std::string>()), "edge state");
      std::optional<double> score;
      if (!row.at(3).is_null()) score = row.at(3).get<double>();
      g.add_edge(g.pair_of(row.at(0).get<std::string>(), row.at(1).get<std::string>()), state, score);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed graph: ") + e.what());
  }
  return g;
}

namespace {

ojson components_to_json(const std::vector<ComponentReport>& cs) {
  auto arr = ojson::array();
  for (const auto& c : cs) {
    ojson o;
    o["component_id"] = c.component_id;
    o["k"] = c.k;
    o["m"] = c.m;
    o["pos_tr"] = c.pos_tr;
    o["neg_tr"] = c.neg_tr;
    o["sampled"] = c.sampled;
    arr.push_back(std::move(o));
  }
  return arr;
}

std::vector<ComponentReport> components_from_json(const nlohmann::json& arr) {
  std::vector<ComponentReport> out;
  for (const auto& o : arr) {
    ComponentReport c;
    c.component_id = o.at("component_id").get<std::string>();
    c.k = o.at("k").get<std::size_t>();
    c.m = o.at("m").get<std::size_t>();
    c.pos_tr = o.at("pos_tr").get<std::size_t>();
    c.neg_tr = o.at("neg_tr").get<std::size_t>();
    c.sampled = o.at("sampled").get<bool>();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

ojson report_to_json(const TransitiveReport& r) {
  ojson j;
  j["step"] = r.step_name;
  j["generation"] = r.generation;
  j["total_pos"] = r.total_pos;
  j["total_neg"] = r.total_neg;
  j["live_edges"] = r.live_edges;
  j["components"] = components_to_json(r.per_component);
  j["dissolved"] = components_to_json(r.dissolved);
  return j;
}

TransitiveReport report_from_json(const nlohmann::json& j) {
  TransitiveReport r;
  r.step_name = j.at("step").get<std::string>();
  r.generation = j.at("generation").get<std::int64_t>();
  r.total_pos = j.at("total_pos").get<std::size_t>();
  r.total_neg = j.at("total_neg").get<std::size_t>();
  r.live_edges = j.at("live_edges").get<std::size_t>();
  r.per_component = components_from_json(j.at("components"));
  r.dissolved = components_from_json(j.at("dissolved"));
  return r;
}

ojson ledger_to_json(const BudgetLedger& l) {
  ojson j;
  j["lb_total"] = l.lb_total;
  j["lb_init_cap"] = l.lb_init_cap;
  j["per_iteration_cap"] = l.per_iteration_cap;
  j["safety_limit"] = l.safety_limit;
  j["spent_init"] = l.spent_init;
  j["spent_per_iteration"] = l.spent_per_iteration;
  j["spent_size_check"] = l.spent_size_check;
  j["spent_labeled_trans_check"] = l.spent_labeled_trans_check;
  j["spent_final_trans_check"] = l.spent_final_trans_check;
  j["spent_postft"] = l.spent_postft();
  j["recovery_budget"] = l.recovery_budget();
  j["spent_recovery"] = l.spent_recovery;
  j["spent_total"] = l.spent_total();
  return j;
}

BudgetLedger ledger_from_json(const nlohmann::json& j) {
  BudgetLedger l;
  l.lb_total = j.at("lb_total").get<std::size_t>();
  l.lb_init_cap = j.at("lb_init_cap").get<std::size_t>();
  l.per_iteration_cap = j.at("per_iteration_cap").get<std::size_t>();
  l.safety_limit = j.at("safety_limit").get<std::size_t>();
  l.spent_init = j.at("spent_init").get<std::size_t>();
  l.spent_per_iteration = j.at("spent_per_iteration").get<std::vector<std::size_t>>();
  l.spent_size_check = j.at("spent_size_check").get<std::size_t>();
  l.spent_labeled_trans_check = j.at("spent_labeled_trans_check").get<std::size_t>();
  l.spent_final_trans_check = j.at("spent_final_trans_check").get<std::size_t>();
  l.spent_recovery = j.at("spent_recovery").get<std::size_t>();
  return l;
}

ojson label_to_json(const LabelRecord& r) {
  ojson j;
  j["pair"] = ojson::array({r.pair.first, r.pair.second});
  j["label"] = std::string(to_string(r.label));
  j["source"] = std::string(to_string(r.source));
  j["phase"] = std::string(to_string(r.phase));
  j["check"] = std::string(to_string(r.check));
  j["ts"] = r.ts;
  if (r.superseded) j["superseded"] = true;
  return j;
}

LabelRecord label_from_json(const nlohmann::json& j) {
  LabelRecord r;
  try {
    const auto& pair = j.at("pair");
    if (!pair.is_array() || pair.size() != 2) throw Error(ErrorCode::InvalidInput, "label pair must have two ids");
    r.pair = RecordPair(pair[0].get<std::string>(), pair[1].get<std::string>());
    r.label = required_enum(parse_label(j.at("label").get<std::string>()), "label");
    r.source = required_enum(parse_source(j.at("source").get<std::string>()), "label source");
    r.phase = required_enum(parse_phase(j.at("phase").get<std::string>()), "phase");
    r.check = j.contains("check") ? required_enum(parse_check(j["check"].get<std::string>()), "check") : CheckKind::None;
    r.ts = j.at("ts").get<std::uint64_t>();
    r.superseded = j.value("superseded", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed label record: ") + e.what());
  }
  return r;
}

}  // namespace fpclean::detail
