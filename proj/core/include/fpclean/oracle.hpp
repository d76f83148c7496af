#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fpclean/channel.hpp"
#include "fpclean/matcher.hpp"
#include "fpclean/record.hpp"

namespace fpclean {

enum class Phase : std::uint8_t { Init, PostFT, Recovery };
/// Which post-finetune check spent a label (None outside that phase).
enum class CheckKind : std::uint8_t { None, SizeCheck, LabeledTransCheck, FinalTransCheck };
enum class LabelSourceKind : std::uint8_t { GroundTruth, Human, LLM, Replay };

std::string_view to_string(Phase p) noexcept;
std::string_view to_string(CheckKind c) noexcept;
std::string_view to_string(LabelSourceKind s) noexcept;
std::optional<Phase> parse_phase(std::string_view s) noexcept;
std::optional<CheckKind> parse_check(std::string_view s) noexcept;
std::optional<LabelSourceKind> parse_source(std::string_view s) noexcept;

/// Labeling budget and its consumption per phase. Init and Recovery are
/// capped; the post-finetune checks are metered against a safety limit only.
struct BudgetLedger {
  std::size_t lb_total = 0;
  std::size_t lb_init_cap = 0;
  std::size_t per_iteration_cap = 0;
  std::size_t safety_limit = 0;

  std::size_t spent_init = 0;
  std::size_t spent_size_check = 0;
  std::size_t spent_labeled_trans_check = 0;
  std::size_t spent_final_trans_check = 0;
  std::size_t spent_recovery = 0;
  std::vector<std::size_t> spent_per_iteration;

  /// lb_init_cap = lb_total / 2, per-iteration cap = lb_init_cap / iterations.
  static BudgetLedger with_defaults(std::size_t lb_total, std::size_t iterations, std::size_t safety_factor = 10);

  std::size_t spent_postft() const noexcept {
    return spent_size_check + spent_labeled_trans_check + spent_final_trans_check;
  }
  std::size_t spent_total() const noexcept { return spent_init + spent_postft() + spent_recovery; }
  /// max(0, lb_total - spent_init - spent_postft)
  std::size_t recovery_budget() const noexcept;
  std::size_t recovery_remaining() const noexcept;
  std::size_t init_remaining(std::size_t iteration) const noexcept;

  friend bool operator==(const BudgetLedger&, const BudgetLedger&) = default;
};

struct LabelRecord {
  RecordPair pair;
  Label label = Label::NoMatch;
  LabelSourceKind source = LabelSourceKind::GroundTruth;
  Phase phase = Phase::Init;
  CheckKind check = CheckKind::None;
  std::uint64_t ts = 0;  // logical sequence number of the label event
  bool superseded = false;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

/// Every label ever obtained. A pair is labeled at most once, except that a
/// human label supersedes an earlier LLM label (kept in history).
class LabelStore {
 public:
  std::optional<LabelRecord> find(const RecordPair& pair) const;
  /// Returns the record now current for the pair.
  const LabelRecord& record(LabelRecord rec);

  std::size_t size() const noexcept { return current_.size(); }
  const std::map<RecordPair, LabelRecord>& current() const noexcept { return current_; }
  const std::vector<LabelRecord>& history() const noexcept { return history_; }

 private:
  std::map<RecordPair, LabelRecord> current_;
  std::vector<LabelRecord> history_;
};

class LabelSource {
 public:
  virtual ~LabelSource() = default;
  virtual LabelSourceKind kind() const noexcept = 0;
  /// Hint that these pairs are about to be queried in this order.
  virtual void prepare(std::span<const RecordPairRef>) {}
  virtual Label label(const Record& a, const Record& b) = 0;
};

class GroundTruthSource final : public LabelSource {
 public:
  explicit GroundTruthSource(std::unordered_map<std::string, std::string> assignment)
      : assignment_(std::move(assignment)) {}
  LabelSourceKind kind() const noexcept override { return LabelSourceKind::GroundTruth; }
  Label label(const Record& a, const Record& b) override;

 private:
  std::unordered_map<std::string, std::string> assignment_;
};

/// Ground truth with a deterministic fraction of flipped labels; stands in
/// for an imperfect pseudo-labeler, so it reports itself as an LLM source.
class NoisySource final : public LabelSource {
 public:
  NoisySource(std::unordered_map<std::string, std::string> assignment, double flip_rate, std::uint64_t seed);
  LabelSourceKind kind() const noexcept override { return LabelSourceKind::LLM; }
  Label label(const Record& a, const Record& b) override;

 private:
  GroundTruthSource truth_;
  double flip_rate_;
  std::uint64_t seed_;
};

/// Plays back a label log in order. Any deviation from the recorded pair
/// sequence raises ReplayDivergence.
class ReplaySource final : public LabelSource {
 public:
  explicit ReplaySource(std::vector<LabelRecord> log);
  LabelSourceKind kind() const noexcept override { return LabelSourceKind::Replay; }
  Label label(const Record& a, const Record& b) override;
  std::size_t consumed() const noexcept { return next_; }
  std::size_t size() const noexcept { return log_.size(); }

 private:
  std::vector<LabelRecord> log_;
  std::size_t next_ = 0;
};

/// `Do these two records represent the same entity? ...` prompt with each
/// record rendered as `key: value, key: value`.
std::string build_llm_prompt(const Record& a, const Record& b);
std::string serialize_for_prompt(const Record& r);
/// Case-insensitive: contains "yes" -> Match, otherwise NoMatch.
Label parse_llm_reply(std::string_view text);

struct LlmSourceOptions {
  std::chrono::milliseconds timeout{60'000};
  /// On timeout return NoMatch instead of raising EndpointUnavailable.
  bool fallback_to_nomatch = true;
};

/// Pseudo-labeler over the line protocol (verb `pseudolabel`).
class LlmSource final : public LabelSource {
 public:
  LlmSource(std::unique_ptr<LineChannel> channel, LlmSourceOptions options = {});
  LabelSourceKind kind() const noexcept override { return LabelSourceKind::LLM; }
  Label label(const Record& a, const Record& b) override;
  std::size_t fallbacks() const noexcept { return fallbacks_; }

 private:
  std::unique_ptr<LineChannel> channel_;
  LlmSourceOptions options_;
  std::int64_t next_id_ = 1;
  std::size_t fallbacks_ = 0;
};

/// Pending human decisions, persisted to a JSON file on every change so a
/// run can stop and resume without losing or double-spending labels.
class HumanQueue {
 public:
  struct Item {
    RecordPair pair;
    std::uint64_t order = 0;
  };

  explicit HumanQueue(std::optional<std::filesystem::path> path = std::nullopt);

  /// No-op when the pair is already pending or answered.
  void push(const RecordPair& pair);
  /// Throws Error(NotPending) when the pair is not waiting for a label.
  void resolve(const RecordPair& pair, Label label);
  /// Blocks until the pair is resolved, then consumes the answer.
  Label wait(const RecordPair& pair);
  std::optional<Label> try_take(const RecordPair& pair);

  std::vector<Item> pending() const;
  std::size_t resolved_count() const;
  void close();  // wakes waiters with EndpointUnavailable

 private:
  void persist() const;

  std::optional<std::filesystem::path> path_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::map<RecordPair, std::uint64_t> pending_;
  std::map<RecordPair, Label> answered_;
  std::uint64_t next_order_ = 0;
  std::size_t resolved_ = 0;
  bool closed_ = false;
};

class HumanSource final : public LabelSource {
 public:
  explicit HumanSource(HumanQueue& queue) : queue_(queue) {}
  LabelSourceKind kind() const noexcept override { return LabelSourceKind::Human; }
  void prepare(std::span<const RecordPairRef> pairs) override;
  Label label(const Record& a, const Record& b) override;

 private:
  HumanQueue& queue_;
};

/// Result of one labeling request. `deferred` lists input positions left
/// unlabeled because the phase budget ran out.
struct LabelBatch {
  std::vector<std::optional<LabelRecord>> results;  // aligned with input
  std::vector<std::size_t> deferred;
  bool exhausted = false;
  std::size_t newly_labeled = 0;
};

/// Meters every label against the ledger and appends new labels to the store
/// and, through the listener, to the durable log.
class Oracle {
 public:
  using Listener = std::function<void(const LabelRecord&)>;

  Oracle(std::unique_ptr<LabelSource> source, BudgetLedger ledger);

  /// Use a different source for one phase (e.g. humans for recovery).
  void set_phase_source(Phase phase, std::unique_ptr<LabelSource> source);
  void set_listener(Listener listener) { listener_ = std::move(listener); }
  /// Test hook: throw Error(Interrupted) once this many new labels were logged.
  void halt_after(std::optional<std::size_t> new_labels) { halt_after_ = new_labels; }
  /// Labels recorded in the log after the last checkpoint: answered from
  /// here before asking the source again (budget is still charged).
  void preload_answers(std::vector<LabelRecord> answers);

  void begin_iteration(std::size_t iteration);

  LabelBatch label_pairs(std::span<const RecordPairRef> pairs, Phase phase, CheckKind check = CheckKind::None);

  std::optional<Label> stored(const RecordPair& pair) const;
  const BudgetLedger& ledger() const noexcept { return ledger_; }
  const LabelStore& store() const noexcept { return store_; }
  std::uint64_t next_ts() const noexcept { return next_ts_; }

  /// Restores ledger, store and sequence counter from a checkpoint.
  void restore(BudgetLedger ledger, const std::vector<LabelRecord>& records, std::uint64_t next_ts);

 private:
  LabelSource& source_for(Phase phase);
  std::size_t remaining(Phase phase) const;
  void charge(Phase phase, CheckKind check);

  std::unique_ptr<LabelSource> source_;
  std::map<Phase, std::unique_ptr<LabelSource>> phase_sources_;
  BudgetLedger ledger_;
  LabelStore store_;
  Listener listener_;
  std::optional<std::size_t> halt_after_;
  std::size_t session_labels_ = 0;
  std::size_t current_iteration_ = 0;
  std::uint64_t next_ts_ = 0;
  std::map<RecordPair, LabelRecord> preloaded_;
};

}  // namespace fpclean
