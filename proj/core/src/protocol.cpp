#include "fpclean/protocol.hpp"

#include <nlohmann/json.hpp>

#include "fpclean/error.hpp"
#include "json_codec.hpp"

namespace fpclean::protocol {

using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void violation(const std::string& what, std::string_view raw) {
  throw ProtocolError(what, std::string(raw));
}

ojson parse_line(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::exception& e) {
    violation(std::string("malformed JSON: ") + e.what(), line);
  }
  if (!j.is_object()) violation("message is not an object", line);
  auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer()) violation("missing version field", line);
  if (v->get<int>() != kVersion) violation("unsupported protocol version", line);
  auto id = j.find("id");
  if (id == j.end() || !id->is_number_integer()) violation("missing id field", line);
  return j;
}

const ojson& require(const ojson& j, const char* field, std::string_view raw) {
  auto it = j.find(field);
  if (it == j.end()) violation(std::string("missing field: ") + field, raw);
  return *it;
}

Label label_from(const ojson& j, std::string_view raw) {
  if (!j.is_string()) violation("label is not a string", raw);
  auto label = parse_label(j.get<std::string>());
  if (!label) violation("unknown label: " + j.get<std::string>(), raw);
  return *label;
}

Record record_from(const ojson& j, std::string_view raw) {
  try {
    return json_codec::record_from_json(j);
  } catch (const Error& e) {
    violation(e.what(), raw);
  }
}

std::string dump(const ojson& j) { return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

}  // namespace

std::string encode(const PredictRequest& r) {
  ojson j;
  j["v"] = kVersion;
  j["verb"] = "predict";
  j["id"] = r.id;
  ojson pairs = ojson::array();
  for (const auto& [a, b] : r.pairs) pairs.push_back(ojson::array({json_codec::record_to_json(a), json_codec::record_to_json(b)}));
  j["pairs"] = std::move(pairs);
  return dump(j);
}

std::string encode(const FinetuneRequest& r) {
  ojson j;
  j["v"] = kVersion;
  j["verb"] = "finetune";
  j["id"] = r.id;
  ojson examples = ojson::array();
  for (const auto& ex : r.examples)
    examples.push_back(ojson::array(
        {json_codec::record_to_json(ex.a), json_codec::record_to_json(ex.b), std::string(to_string(ex.label))}));
  j["examples"] = std::move(examples);
  return dump(j);
}

std::string encode(const PseudolabelRequest& r) {
  ojson j;
  j["v"] = kVersion;
  j["verb"] = "pseudolabel";
  j["id"] = r.id;
  j["prompt"] = r.prompt;
  return dump(j);
}

std::string encode(const PredictReply& r) {
  ojson j;
  j["v"] = kVersion;
  j["id"] = r.id;
  ojson preds = ojson::array();
  for (auto p : r.preds) preds.push_back(std::string(to_string(p)));
  j["preds"] = std::move(preds);
  if (r.scores) j["scores"] = *r.scores;
  return dump(j);
}

std::string encode(const FinetuneReply& r) {
  ojson j;
  j["v"] = kVersion;
  j["id"] = r.id;
  j["generation"] = r.generation;
  return dump(j);
}

std::string encode(const PseudolabelReply& r) {
  ojson j;
  j["v"] = kVersion;
  j["id"] = r.id;
  j["text"] = r.text;
  return dump(j);
}

Request decode_request(std::string_view line) {
  ojson j = parse_line(line);
  const auto& verb = require(j, "verb", line);
  if (!verb.is_string()) violation("verb is not a string", line);
  const auto id = j["id"].get<std::int64_t>();
  const auto name = verb.get<std::string>();
  if (name == "predict") {
    PredictRequest r{id, {}};
    const auto& pairs = require(j, "pairs", line);
    if (!pairs.is_array()) violation("pairs is not an array", line);
    for (const auto& p : pairs) {
      if (!p.is_array() || p.size() != 2) violation("pair must hold two records", line);
      r.pairs.emplace_back(record_from(p[0], line), record_from(p[1], line));
    }
    return r;
  }
  if (name == "finetune") {
    FinetuneRequest r{id, {}};
    const auto& examples = require(j, "examples", line);
    if (!examples.is_array()) violation("examples is not an array", line);
    for (const auto& e : examples) {
      if (!e.is_array() || e.size() != 3) violation("example must hold two records and a label", line);
      r.examples.push_back({record_from(e[0], line), record_from(e[1], line), label_from(e[2], line)});
    }
    return r;
  }
  if (name == "pseudolabel") {
    const auto& prompt = require(j, "prompt", line);
    if (!prompt.is_string()) violation("prompt is not a string", line);
    return PseudolabelRequest{id, prompt.get<std::string>()};
  }
  violation("unknown verb: " + name, line);
}

PredictReply decode_predict_reply(std::string_view line) {
  ojson j = parse_line(line);
  PredictReply r;
  r.id = j["id"].get<std::int64_t>();
  const auto& preds = require(j, "preds", line);
  if (!preds.is_array()) violation("preds is not an array", line);
  for (const auto& p : preds) r.preds.push_back(label_from(p, line));
  if (auto it = j.find("scores"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != r.preds.size()) violation("scores must align with preds", line);
    std::vector<double> scores;
    for (const auto& s : *it) {
      if (!s.is_number()) violation("score is not a number", line);
      scores.push_back(s.get<double>());
    }
    r.scores = std::move(scores);
  }
  return r;
}

FinetuneReply decode_finetune_reply(std::string_view line) {
  ojson j = parse_line(line);
  const auto& gen = require(j, "generation", line);
  if (!gen.is_number_integer()) violation("generation is not an integer", line);
  return FinetuneReply{j["id"].get<std::int64_t>(), gen.get<std::int64_t>()};
}

PseudolabelReply decode_pseudolabel_reply(std::string_view line) {
  ojson j = parse_line(line);
  const auto& text = require(j, "text", line);
  if (!text.is_string()) violation("text is not a string", line);
  return PseudolabelReply{j["id"].get<std::int64_t>(), text.get<std::string>()};
}

}  // namespace fpclean::protocol
