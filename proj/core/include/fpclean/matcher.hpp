#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fpclean/channel.hpp"
#include "fpclean/record.hpp"

namespace fpclean {

struct PairPrediction {
  RecordPair pair;
  Label label = Label::NoMatch;
  std::optional<double> score;
};

struct RecordPairRef {
  const Record* a = nullptr;
  const Record* b = nullptr;
};

struct TrainingExample {
  const Record* a = nullptr;
  const Record* b = nullptr;
  Label label = Label::NoMatch;
};

enum class MatcherKind { Simulated, External };

/// A pairwise matching model. Implementations are deterministic within a
/// generation; `finetune` advances the generation.
class Matcher {
 public:
  virtual ~Matcher() = default;

  virtual MatcherKind kind() const noexcept = 0;
  virtual bool supports_finetune() const noexcept = 0;
  virtual std::int64_t generation() const noexcept = 0;
  virtual double decision_threshold() const noexcept { return 0.5; }

  /// One prediction per input pair, in input order.
  virtual std::vector<PairPrediction> evaluate_batch(std::span<const RecordPairRef> pairs) = 0;

  /// Throws Error(FinetuneUnsupported) when supports_finetune() is false.
  virtual void finetune(std::span<const TrainingExample> labeled) = 0;

  /// Opaque JSON text used by checkpoints.
  virtual std::string save_state() const = 0;
  virtual void restore_state(std::string_view state) = 0;
};

struct SimulatedMatcherSpec {
  std::unordered_map<std::string, std::string> ground_truth;  // record_id -> entity_id
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  std::uint64_t noise_seed = 0;
  /// Fixed verdicts; finetune adds every labeled pair here.
  std::map<RecordPair, Label> overrides;
  double error_decay = 1.0;  // in (0, 1]
  bool finetune_enabled = true;
};

/// Test double for a trained model. Pair noise is a pure function of
/// (noise_seed, generation, min id, max id), so predictions are stable
/// across runs, platforms and batch partitioning.
class SimulatedMatcher final : public Matcher {
 public:
  explicit SimulatedMatcher(SimulatedMatcherSpec spec);

  MatcherKind kind() const noexcept override { return MatcherKind::Simulated; }
  bool supports_finetune() const noexcept override { return spec_.finetune_enabled; }
  std::int64_t generation() const noexcept override { return generation_; }

  std::vector<PairPrediction> evaluate_batch(std::span<const RecordPairRef> pairs) override;
  void finetune(std::span<const TrainingExample> labeled) override;

  std::string save_state() const override;
  void restore_state(std::string_view state) override;

  PairPrediction predict(const std::string& a, const std::string& b) const;
  double fp_rate() const noexcept { return spec_.fp_rate; }
  double fn_rate() const noexcept { return spec_.fn_rate; }
  const SimulatedMatcherSpec& spec() const noexcept { return spec_; }

 private:
  SimulatedMatcherSpec spec_;
  std::int64_t generation_ = 0;
};

struct ExternalMatcherOptions {
  std::size_t batch_size = 256;
  std::chrono::milliseconds timeout{30'000};
  bool finetune_enabled = true;
};

/// Client side of the line protocol (verbs `predict` and `finetune`).
class ExternalMatcher final : public Matcher {
 public:
  ExternalMatcher(std::unique_ptr<LineChannel> channel, ExternalMatcherOptions options = {});

  MatcherKind kind() const noexcept override { return MatcherKind::External; }
  bool supports_finetune() const noexcept override { return options_.finetune_enabled; }
  std::int64_t generation() const noexcept override { return generation_; }

  std::vector<PairPrediction> evaluate_batch(std::span<const RecordPairRef> pairs) override;
  void finetune(std::span<const TrainingExample> labeled) override;

  std::string save_state() const override;
  void restore_state(std::string_view state) override;

 private:
  std::string round_trip(const std::string& request);

  std::unique_ptr<LineChannel> channel_;
  ExternalMatcherOptions options_;
  std::int64_t generation_ = 0;
  std::int64_t next_id_ = 1;
};

}  // namespace fpclean
