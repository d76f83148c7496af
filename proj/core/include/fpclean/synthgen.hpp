#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpclean/eval.hpp"
#include "fpclean/record.hpp"

namespace fpclean {

enum class FieldKind : std::uint8_t { Name, City, Code };

std::string_view to_string(FieldKind k) noexcept;
std::optional<FieldKind> parse_field_kind(std::string_view s) noexcept;

/// Per-record corruption probabilities. Token-level edits apply per token,
/// field blanking per field.
struct Perturbation {
  double char_swap = 0.0;
  double char_drop = 0.0;
  double token_drop = 0.0;
  double token_reorder = 0.0;
  double field_blank = 0.0;

  static Perturbation moderate();
};

struct SynthSpec {
  std::size_t n_entities = 500;
  std::size_t sources = 5;  // >= 3
  /// Weight of emitting 1..sources records per entity; empty = default shape.
  std::vector<double> records_per_entity;
  std::vector<FieldKind> fields{FieldKind::Name, FieldKind::City, FieldKind::Code};
  Perturbation perturbation = Perturbation::moderate();
  std::uint64_t seed = 42;

  /// Throws InvalidInput on an unusable spec.
  void validate() const;
};

struct SynthData {
  std::vector<Record> records;  // sorted by record_id
  GroundTruth truth;
};

/// Pure function of the spec: each entity emits records from distinct
/// sources, ids are opaque (`r000123`) and carry no entity information.
SynthData generate(const SynthSpec& spec);

}  // namespace fpclean
