#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "fpclean/engine.hpp"
#include "fpclean/eval.hpp"
#include "fpclean/matcher.hpp"
#include "fpclean/oracle.hpp"

namespace fpclean::cli {

namespace fs = std::filesystem;

struct MatcherDescriptor {
  std::string kind = "simulated";  // simulated | external
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  std::uint64_t noise_seed = 0;
  double error_decay = 1.0;
  bool finetune = true;
  std::string command;  // external: shell command speaking the line protocol
  std::size_t batch_size = 256;
  std::int64_t timeout_ms = 30'000;
};

struct OracleDescriptor {
  std::string mode = "groundtruth";  // groundtruth | noisy | llm | human | replay
  double flip_rate = 0.1;            // noisy
  std::uint64_t seed = 0;            // noisy
  std::string command;               // llm
  std::int64_t timeout_ms = 60'000;  // llm
  bool fallback_nomatch = true;      // llm
  fs::path labels;                   // replay
};

/// Everything `clean`, `replay` and `serve` need. Relative paths in a
/// manifest file are resolved against the file's directory.
struct RunManifest {
  fs::path dataset;
  fs::path edges;
  fs::path truth;
  fs::path output_dir;
  MatcherDescriptor matcher;
  OracleDescriptor oracle;
  CleanupConfig config;

  /// Throws InvalidInput when a required input for the chosen modes is missing.
  void validate() const;
};

RunManifest parse_manifest(const nlohmann::json& j, const fs::path& base_dir);
RunManifest load_manifest(const fs::path& path);
nlohmann::ordered_json manifest_to_json(const RunManifest& m);

GroundTruth load_truth(const fs::path& path);
std::unique_ptr<Matcher> make_matcher(const MatcherDescriptor& d, const GroundTruth* truth);

}  // namespace fpclean::cli
