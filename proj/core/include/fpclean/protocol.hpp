#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fpclean/record.hpp"

namespace fpclean::protocol {

// Newline-delimited wire protocol shared by matcher bridges and the
// pseudo-labeler. One JSON object per line, version field "v" == 1.

inline constexpr int kVersion = 1;

struct PredictRequest {
  std::int64_t id = 0;
  std::vector<std::pair<Record, Record>> pairs;
};

struct PredictReply {
  std::int64_t id = 0;
  std::vector<Label> preds;
  std::optional<std::vector<double>> scores;
};

struct LabeledExample {
  Record a;
  Record b;
  Label label = Label::NoMatch;
};

struct FinetuneRequest {
  std::int64_t id = 0;
  std::vector<LabeledExample> examples;
};

struct FinetuneReply {
  std::int64_t id = 0;
  std::int64_t generation = 0;
};

struct PseudolabelRequest {
  std::int64_t id = 0;
  std::string prompt;
};

struct PseudolabelReply {
  std::int64_t id = 0;
  std::string text;
};

using Request = std::variant<PredictRequest, FinetuneRequest, PseudolabelRequest>;

enum class Verb { Predict, Finetune, Pseudolabel };

std::string encode(const PredictRequest& r);
std::string encode(const FinetuneRequest& r);
std::string encode(const PseudolabelRequest& r);
std::string encode(const PredictReply& r);
std::string encode(const FinetuneReply& r);
std::string encode(const PseudolabelReply& r);

/// Parses a request line; unknown verbs and versions raise ProtocolError.
Request decode_request(std::string_view line);

/// Reply lines carry no verb, so the caller states what it expects.
PredictReply decode_predict_reply(std::string_view line);
FinetuneReply decode_finetune_reply(std::string_view line);
PseudolabelReply decode_pseudolabel_reply(std::string_view line);

}  // namespace fpclean::protocol
