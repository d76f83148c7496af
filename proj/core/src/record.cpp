#include "fpclean/record.hpp"

#include <algorithm>

#include "fpclean/error.hpp"

namespace fpclean {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DegenerateComponent: return "DegenerateComponent";
    case ErrorCode::NodeNotInComponent: return "NodeNotInComponent";
    case ErrorCode::EndpointUnavailable: return "EndpointUnavailable";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::FinetuneUnsupported: return "FinetuneUnsupported";
    case ErrorCode::NotPending: return "NotPending";
    case ErrorCode::InsufficientSeries: return "InsufficientSeries";
    case ErrorCode::SafetyLimitExceeded: return "SafetyLimitExceeded";
    case ErrorCode::ReplayDivergence: return "ReplayDivergence";
    case ErrorCode::Interrupted: return "Interrupted";
  }
  return "Unknown";
}

std::string_view to_string(Label label) noexcept {
  return label == Label::Match ? "match" : "nomatch";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
  if (text == "match") return Label::Match;
  if (text == "nomatch") return Label::NoMatch;
  return std::nullopt;
}

RecordPair::RecordPair(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  first = std::move(a);
  second = std::move(b);
}

std::string RecordPair::key() const { return first + "::" + second; }

std::optional<RecordPair> RecordPair::from_key(std::string_view key) {
  auto pos = key.find("::");
  if (pos == std::string_view::npos || pos == 0 || pos + 2 >= key.size()) return std::nullopt;
  if (key.find("::", pos + 2) != std::string_view::npos) return std::nullopt;
  return RecordPair(std::string(key.substr(0, pos)), std::string(key.substr(pos + 2)));
}

std::size_t RecordPairHash::operator()(const RecordPair& p) const noexcept {
  std::size_t h = std::hash<std::string>{}(p.first);
  return h ^ (std::hash<std::string>{}(p.second) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

Dataset::Dataset(std::vector<Record> records) : records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(),
            [](const Record& a, const Record& b) { return a.record_id < b.record_id; });
  index_.reserve(records_.size());
  for (std::uint32_t i = 0; i < records_.size(); ++i) {
    if (records_[i].record_id.empty()) throw Error(ErrorCode::InvalidInput, "empty record_id");
    if (!index_.emplace(records_[i].record_id, i).second)
      throw Error(ErrorCode::InvalidInput, "duplicate record_id: " + records_[i].record_id);
  }
}

std::optional<std::uint32_t> Dataset::find(std::string_view record_id) const {
  auto it = index_.find(std::string(record_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Dataset::index_of(std::string_view record_id) const {
  if (auto i = find(record_id)) return *i;
  throw Error(ErrorCode::InvalidInput, "unknown record_id: " + std::string(record_id));
}

}  // namespace fpclean
