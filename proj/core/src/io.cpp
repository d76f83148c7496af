#include "fpclean/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "fpclean/error.hpp"
#include "json_codec.hpp"
#include "serialize.hpp"

namespace fpclean::io {

using detail::ojson;
using nlohmann::json;

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
    start = end + 1;
  }
  return out;
}

ojson parse_line(std::string_view line, std::size_t lineno) {
  try {
    return ojson::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, "line " + std::to_string(lineno) + " is not valid JSON: " + e.what());
  }
}

ojson parse_doc(std::string_view text, std::string_view format) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, "expected a fpclean." + std::string(format) + " JSON document: " + e.what());
  }
  detail::expect_header(j, format);
  return j;
}

// Header line plus body lines; `body` receives (object, 1-based line number).
template <typename F>
void for_each_body_line(std::string_view text, std::string_view format, F&& body) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::InvalidInput, "empty fpclean." + std::string(format) + " file");
  detail::expect_header(parse_line(lines[0], 1), format);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto obj = parse_line(lines[i], i + 1);
    try {
      body(obj, i + 1);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput, "line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

std::string header_line(std::string_view format) { return detail::header(format).dump() + "\n"; }

std::string string_value(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

// RFC 4180: quoted fields may hold separators, doubled quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::InvalidInput, "unterminated quoted CSV field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::optional<double> optional_score(const ojson& o) {
  auto it = o.find("score");
  if (it == o.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidInput, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string dataset_ndjson(const Dataset& ds) {
  std::string out = header_line("dataset");
  for (const auto& r : ds.records()) out += json_codec::record_to_json(r).dump() + "\n";
  return out;
}

Dataset parse_dataset(std::string_view text) {
  std::vector<Record> records;
  for_each_body_line(text, "dataset", [&](const ojson& o, std::size_t) {
    records.push_back(json_codec::record_from_json(o));
  });
  return Dataset(std::move(records));
}

Dataset ingest_csv(std::string_view text, const CsvIngestOptions& options) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorCode::InvalidInput, "CSV input has no header row");
  const auto& head = rows[0];
  const auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(head.begin(), head.end(), name);
    if (it == head.end()) return std::nullopt;
    return static_cast<std::size_t>(it - head.begin());
  };
  const auto id_col = find_col(options.id_column);
  if (!id_col) throw Error(ErrorCode::InvalidInput, "CSV input lacks the id column '" + options.id_column + "'");
  const auto src_col = find_col(options.source_column);
  std::vector<Record> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != head.size())
      throw Error(ErrorCode::InvalidInput, "CSV row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                                               " fields, header has " + std::to_string(head.size()));
    Record rec;
    rec.record_id = row[*id_col];
    if (rec.record_id.empty()) throw Error(ErrorCode::InvalidInput, "CSV row " + std::to_string(r + 1) + " has an empty id");
    if (src_col) rec.source_id = row[*src_col];
    for (std::size_t c = 0; c < row.size(); ++c)
      if (c != *id_col && (!src_col || c != *src_col)) rec.attributes.emplace_back(head[c], row[c]);
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records));
}

Dataset ingest_ndjson(std::string_view text) {
  std::vector<Record> records;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto o = parse_line(lines[i], i + 1);
    if (!o.is_object()) throw Error(ErrorCode::InvalidInput, "line " + std::to_string(i + 1) + " is not an object");
    auto attrs = o.find("attributes");
    if (attrs != o.end() && attrs->is_array()) {
      records.push_back(json_codec::record_from_json(o));
      continue;
    }
    Record rec;
    auto id = o.find("record_id");
    if (id == o.end() || !id->is_string())
      throw Error(ErrorCode::InvalidInput, "line " + std::to_string(i + 1) + " has no string record_id");
    rec.record_id = id->get<std::string>();
    if (auto src = o.find("source_id"); src != o.end()) rec.source_id = string_value(*src);
    if (attrs == o.end()) {
      for (const auto& [k, v] : o.items())
        if (k != "record_id" && k != "source_id") rec.attributes.emplace_back(k, string_value(v));
    } else if (attrs->is_object()) {
      for (const auto& [k, v] : attrs->items()) rec.attributes.emplace_back(k, string_value(v));
    } else {
      throw Error(ErrorCode::InvalidInput, "line " + std::to_string(i + 1) + ": attributes must be a list or object");
    }
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records));
}

std::string ground_truth_csv(const GroundTruth& gt) {
  std::map<std::string, std::string> sorted(gt.assignment.begin(), gt.assignment.end());
  std::string out = "# format=fpclean.groundtruth version=1\nrecord_id,entity_id\n";
  for (const auto& [rec, ent] : sorted) out += csv_field(rec) + "," + csv_field(ent) + "\n";
  return out;
}

GroundTruth parse_ground_truth(std::string_view text) {
  if (text.substr(0, 1) == "#") {
    const auto nl = text.find('\n');
    std::string_view first = text.substr(0, nl);
    if (!first.empty() && first.back() == '\r') first.remove_suffix(1);
    if (first != "# format=fpclean.groundtruth version=1")
      throw Error(ErrorCode::InvalidInput, "unsupported ground truth header: " + std::string(first));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
  }
  const auto rows = parse_csv(text);
  GroundTruth gt;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (r == 0 && row.size() == 2 && row[0] == "record_id") continue;
    if (row.size() != 2 || row[0].empty())
      throw Error(ErrorCode::InvalidInput, "ground truth row " + std::to_string(r + 1) + " must be record_id,entity_id");
    if (!gt.assignment.emplace(row[0], row[1]).second)
      throw Error(ErrorCode::InvalidInput, "record " + row[0] + " is assigned twice in the ground truth");
  }
  return gt;
}

std::string candidates_ndjson(std::span<const CandidatePair> pairs) {
  std::string out = header_line("candidates");
  for (const auto& p : pairs) {
    ojson o;
    o["a"] = p.pair.first;
    o["b"] = p.pair.second;
    o["overlap"] = p.overlap;
    o["rank_a"] = p.rank_for_a;
    o["rank_b"] = p.rank_for_b;
    out += o.dump() + "\n";
  }
  return out;
}

std::vector<CandidatePair> parse_candidates(std::string_view text) {
  std::vector<CandidatePair> out;
  for_each_body_line(text, "candidates", [&](const ojson& o, std::size_t) {
    CandidatePair p;
    p.pair = RecordPair(o.at("a").get<std::string>(), o.at("b").get<std::string>());
    p.overlap = o.at("overlap").get<std::uint32_t>();
    p.rank_for_a = o.value("rank_a", 0u);
    p.rank_for_b = o.value("rank_b", 0u);
    out.push_back(std::move(p));
  });
  return out;
}

std::string edges_ndjson(std::span<const PairPrediction> predictions) {
  std::string out = header_line("edges");
  for (const auto& p : predictions) {
    ojson o;
    o["a"] = p.pair.first;
    o["b"] = p.pair.second;
    o["label"] = std::string(to_string(p.label));
    if (p.score) o["score"] = *p.score;
    else o["score"] = nullptr;
    out += o.dump() + "\n";
  }
  return out;
}

std::vector<PairPrediction> parse_edges(std::string_view text) {
  std::vector<PairPrediction> out;
  for_each_body_line(text, "edges", [&](const ojson& o, std::size_t line) {
    PairPrediction p;
    p.pair = RecordPair(o.at("a").get<std::string>(), o.at("b").get<std::string>());
    const auto label = parse_label(o.value("label", std::string("match")));
    if (!label) throw Error(ErrorCode::InvalidInput, "line " + std::to_string(line) + ": unknown label");
    p.label = *label;
    p.score = optional_score(o);
    out.push_back(std::move(p));
  });
  return out;
}

std::string label_log_header() { return header_line("labels"); }

std::string label_line(const LabelRecord& rec) { return detail::label_to_json(rec).dump(); }

std::string label_log(std::span<const LabelRecord> records) {
  std::string out = label_log_header();
  for (const auto& r : records) out += label_line(r) + "\n";
  return out;
}

std::vector<LabelRecord> parse_label_log(std::string_view text) {
  std::vector<LabelRecord> out;
  for_each_body_line(text, "labels", [&](const ojson& o, std::size_t) { out.push_back(detail::label_from_json(o)); });
  return out;
}

std::string graph_json(const MatchingGraph& g) { return detail::graph_to_json(g).dump() + "\n"; }

MatchingGraph parse_graph(std::string_view text, DatasetPtr dataset) {
  const auto j = parse_doc(text, "graph");
  if (j.contains("records") && j["records"].get<std::size_t>() != dataset->size())
    throw Error(ErrorCode::InvalidInput, "graph was written for a dataset of a different size");
  return detail::graph_from_json(j, std::move(dataset));
}

std::string report_json(const TransitiveReport& r) { return detail::report_to_json(r).dump(); }

std::string reports_json(std::span<const TransitiveReport> reports) {
  ojson j = detail::header("reports");
  auto arr = ojson::array();
  for (const auto& r : reports) arr.push_back(detail::report_to_json(r));
  j["reports"] = std::move(arr);
  return j.dump() + "\n";
}

std::vector<TransitiveReport> parse_reports(std::string_view text) {
  const auto j = parse_doc(text, "reports");
  std::vector<TransitiveReport> out;
  try {
    for (const auto& r : j.at("reports")) out.push_back(detail::report_from_json(r));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed reports: ") + e.what());
  }
  return out;
}

std::string ledger_json(const BudgetLedger& l) {
  ojson j = detail::header("ledger");
  const ojson body = detail::ledger_to_json(l);
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j.dump() + "\n";
}

BudgetLedger parse_ledger(std::string_view text) {
  const auto j = parse_doc(text, "ledger");
  try {
    return detail::ledger_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed ledger: ") + e.what());
  }
}

std::string synth_spec_json(const SynthSpec& spec) {
  ojson j = detail::header("synthspec");
  j["n_entities"] = spec.n_entities;
  j["sources"] = spec.sources;
  j["records_per_entity"] = spec.records_per_entity;
  auto fields = ojson::array();
  for (auto f : spec.fields) fields.push_back(std::string(to_string(f)));
  j["fields"] = std::move(fields);
  ojson p;
  p["char_swap"] = spec.perturbation.char_swap;
  p["char_drop"] = spec.perturbation.char_drop;
  p["token_drop"] = spec.perturbation.token_drop;
  p["token_reorder"] = spec.perturbation.token_reorder;
  p["field_blank"] = spec.perturbation.field_blank;
  j["perturbation"] = std::move(p);
  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

SynthSpec parse_synth_spec(std::string_view text) {
  const auto j = parse_doc(text, "synthspec");
  SynthSpec s;
  try {
    s.n_entities = j.value("n_entities", s.n_entities);
    s.sources = j.value("sources", s.sources);
    s.records_per_entity = j.value("records_per_entity", s.records_per_entity);
    if (j.contains("fields")) {
      s.fields.clear();
      for (const auto& f : j["fields"]) {
        auto kind = parse_field_kind(f.get<std::string>());
        if (!kind) throw Error(ErrorCode::InvalidInput, "unknown field kind " + f.dump());
        s.fields.push_back(*kind);
      }
    }
    if (j.contains("perturbation")) {
      const auto& p = j["perturbation"];
      if (p.is_string()) {
        if (p == "none") s.perturbation = Perturbation{};
        else if (p == "moderate") s.perturbation = Perturbation::moderate();
        else throw Error(ErrorCode::InvalidInput, "unknown perturbation preset " + p.dump());
      } else {
        s.perturbation.char_swap = p.value("char_swap", s.perturbation.char_swap);
        s.perturbation.char_drop = p.value("char_drop", s.perturbation.char_drop);
        s.perturbation.token_drop = p.value("token_drop", s.perturbation.token_drop);
        s.perturbation.token_reorder = p.value("token_reorder", s.perturbation.token_reorder);
        s.perturbation.field_blank = p.value("field_blank", s.perturbation.field_blank);
      }
    }
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

StepPartition partition_of(const MatchingGraph& g, std::string step_name) {
  StepPartition p;
  p.step_name = std::move(step_name);
  for (const auto& c : g.components()) {
    std::vector<std::string> ids;
    ids.reserve(c.nodes.size());
    for (auto n : c.nodes) ids.push_back(g.id_of(n));
    p.components.push_back(std::move(ids));
  }
  return p;
}

MatchingGraph graph_from_partition(const StepPartition& p, DatasetPtr dataset) {
  MatchingGraph g(std::move(dataset));
  for (const auto& comp : p.components)
    for (std::size_t i = 1; i < comp.size(); ++i) g.add_edge(g.pair_of(comp[0], comp[i]));
  return g;
}

std::string step_partition_header() { return header_line("steps"); }

std::string step_partition_line(const StepPartition& p) {
  ojson o;
  o["step"] = p.step_name;
  o["components"] = p.components;
  return o.dump();
}

std::vector<StepPartition> parse_step_partitions(std::string_view text) {
  std::vector<StepPartition> out;
  for_each_body_line(text, "steps", [&](const ojson& o, std::size_t) {
    StepPartition p;
    p.step_name = o.at("step").get<std::string>();
    p.components = o.at("components").get<std::vector<std::vector<std::string>>>();
    out.push_back(std::move(p));
  });
  return out;
}

}  // namespace fpclean::io
