#pragma once

#include <nlohmann/json.hpp>

#include "fpclean/record.hpp"

// JSON helpers shared by the protocol codecs and the file formats.
namespace fpclean::json_codec {

using ojson = nlohmann::ordered_json;

ojson record_to_json(const Record& r);
/// Throws Error(InvalidInput) on a malformed record object.
Record record_from_json(const ojson& j);

}  // namespace fpclean::json_codec
