#include "json_codec.hpp"

#include "fpclean/error.hpp"

namespace fpclean::json_codec {

ojson record_to_json(const Record& r) {
  ojson j;
  j["record_id"] = r.record_id;
  j["source_id"] = r.source_id;
  ojson attrs = ojson::array();
  for (const auto& [k, v] : r.attributes) attrs.push_back(ojson::array({k, v}));
  j["attributes"] = std::move(attrs);
  return j;
}

Record record_from_json(const ojson& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "record is not an object");
  Record r;
  auto id = j.find("record_id");
  if (id == j.end() || !id->is_string()) throw Error(ErrorCode::InvalidInput, "record without string record_id");
  r.record_id = id->get<std::string>();
  if (auto src = j.find("source_id"); src != j.end() && src->is_string()) r.source_id = src->get<std::string>();
  if (auto attrs = j.find("attributes"); attrs != j.end() && !attrs->is_null()) {
    if (!attrs->is_array()) throw Error(ErrorCode::InvalidInput, "attributes is not an array");
    for (const auto& kv : *attrs) {
      if (!kv.is_array() || kv.size() != 2 || !kv[0].is_string() || !kv[1].is_string())
        throw Error(ErrorCode::InvalidInput, "attribute must be a [key, value] string pair");
      r.attributes.emplace_back(kv[0].get<std::string>(), kv[1].get<std::string>());
    }
  }
  return r;
}

}  // namespace fpclean::json_codec
