#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fpclean {

using Attribute = std::pair<std::string, std::string>;

/// An entity mention. Equality and ordering are by record_id only.
struct Record {
  std::string record_id;
  std::string source_id;
  std::vector<Attribute> attributes;

  friend bool operator==(const Record& a, const Record& b) { return a.record_id == b.record_id; }
};

enum class Label : std::uint8_t { NoMatch = 0, Match = 1 };

std::string_view to_string(Label label) noexcept;
/// Accepts "match" / "nomatch" (case-sensitive, wire form).
std::optional<Label> parse_label(std::string_view text) noexcept;

/// Unordered pair of record ids, stored canonically with first < second.
struct RecordPair {
  std::string first;
  std::string second;

  RecordPair() = default;
  RecordPair(std::string a, std::string b);

  /// `first::second`, the key used by the HTTP queue API.
  std::string key() const;
  static std::optional<RecordPair> from_key(std::string_view key);

  friend auto operator<=>(const RecordPair&, const RecordPair&) = default;
  friend bool operator==(const RecordPair&, const RecordPair&) = default;
};

struct RecordPairHash {
  std::size_t operator()(const RecordPair& p) const noexcept;
};

/// Immutable record collection sorted by record_id. Node index i is the
/// position of a record in that order, so index order equals id order.
class Dataset {
 public:
  Dataset() = default;
  /// Throws Error(InvalidInput) on duplicate record ids.
  explicit Dataset(std::vector<Record> records);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const Record& operator[](std::uint32_t index) const { return records_[index]; }
  const std::vector<Record>& records() const noexcept { return records_; }

  std::optional<std::uint32_t> find(std::string_view record_id) const;
  std::uint32_t index_of(std::string_view record_id) const;  // throws InvalidInput

 private:
  std::vector<Record> records_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

using DatasetPtr = std::shared_ptr<const Dataset>;

}  // namespace fpclean
