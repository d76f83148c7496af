#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpclean/graph.hpp"
#include "fpclean/matcher.hpp"
#include "fpclean/oracle.hpp"

namespace fpclean {

struct CleanupConfig {
  std::size_t n_iterations = 5;
  std::size_t size_threshold = 50;  // S
  std::size_t lb_total = 0;
  std::uint64_t seed = 0;
  /// Transitive pairs evaluated for components above S; default S(S-1)/2.
  std::optional<std::size_t> sample_cap_for_large;
  /// Negative transitive pairs whose shortest paths join the candidates.
  std::size_t shortest_path_subset_size = 10;
  std::size_t safety_factor = 10;

  /// Throws InvalidInput unless n_iterations >= 1 and S >= 2.
  void validate() const;
  std::size_t sample_cap() const noexcept;
};

struct ComponentReport {
  std::string component_id;  // smallest record_id in the component
  std::size_t k = 0;
  std::size_t m = 0;
  std::size_t pos_tr = 0;
  std::size_t neg_tr = 0;
  bool sampled = false;

  friend bool operator==(const ComponentReport&, const ComponentReport&) = default;
};

/// Transitive-prediction counts over every component after one step.
struct TransitiveReport {
  std::string step_name;
  std::int64_t generation = 0;
  std::vector<ComponentReport> per_component;
  std::size_t total_pos = 0;
  std::size_t total_neg = 0;
  std::size_t live_edges = 0;
  /// Components above S whose edges were moved to the removed pool.
  std::vector<ComponentReport> dissolved;

  friend bool operator==(const TransitiveReport&, const TransitiveReport&) = default;
};

/// Evaluation of one component at the current matcher generation.
struct ComponentEval {
  Component component;
  std::vector<NodePair> negatives;  // evaluated transitive pairs predicted NoMatch, sorted
  std::size_t pos = 0;
  std::size_t neg = 0;
  bool sampled = false;
};

/// Step markers of the checkpointed state machine, in execution order:
/// 0 breakdown, 1..n initial iterations, n+1 cleanup, n+2 recovery, n+3 done.
struct StepCursor {
  std::size_t next = 0;
  friend bool operator==(const StepCursor&, const StepCursor&) = default;
};

/// Read-only copy handed to observers (the HTTP layer) between mutations.
struct EngineSnapshot {
  MatchingGraph graph;
  std::map<NodePair, Label> predictions;
  std::vector<TransitiveReport> reports;
  BudgetLedger ledger;
  std::string step;
  bool done = false;
};

class CleanupEngine {
 public:
  using ReportHook = std::function<void(const TransitiveReport&, const MatchingGraph&)>;
  using CheckpointHook = std::function<void(const std::string& checkpoint_json)>;
  using SnapshotHook = std::function<void(std::shared_ptr<const EngineSnapshot>)>;
  using LogHook = std::function<void(std::string_view)>;

  /// The matcher and oracle must outlive the engine.
  CleanupEngine(MatchingGraph graph, Matcher& matcher, Oracle& oracle, CleanupConfig config);

  void on_report(ReportHook hook) { report_hook_ = std::move(hook); }
  void on_checkpoint(CheckpointHook hook) { checkpoint_hook_ = std::move(hook); }
  void on_snapshot(SnapshotHook hook) { snapshot_hook_ = std::move(hook); }
  void on_log(LogHook hook) { log_hook_ = std::move(hook); }

  /// Runs every remaining step, checkpointing after each one.
  void run();
  bool done() const noexcept { return cursor_.next >= total_steps(); }
  std::size_t total_steps() const noexcept { return config_.n_iterations + 3; }
  std::string next_step_name() const;
  /// Executes exactly one step; returns false once done.
  bool step();

  void large_component_breakdown();
  void run_initial_iteration(std::size_t iteration);
  void post_finetune_cleanup();
  void edge_recovery();

  TransitiveReport evaluate_report(const std::string& step_name);
  std::vector<ComponentEval> evaluate_components();
  ComponentEval evaluate_component(const Component& c);
  /// Canonical min cut (labeled matches protected) followed by the edges of
  /// shortest paths for up to shortest_path_subset_size sampled negatives.
  std::vector<NodePair> select_candidate_edges(const ComponentEval& eval, std::size_t iteration) const;
  /// One pass: every component with neg_tr > pos_tr loses its canonical
  /// min cut. Returns the number of edges moved to the pool.
  std::size_t prune_pass(const std::vector<ComponentEval>& evals);

  /// Predictions at the current generation, cached per pair.
  std::vector<Label> predict(std::span<const NodePair> pairs);

  const MatchingGraph& graph() const noexcept { return graph_; }
  const std::vector<TransitiveReport>& reports() const noexcept { return reports_; }
  const std::map<RecordPair, Label>& ft_pairs() const noexcept { return ft_pairs_; }
  const CleanupConfig& config() const noexcept { return config_; }
  const Oracle& oracle() const noexcept { return oracle_; }
  StepCursor cursor() const noexcept { return cursor_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }

  /// Full resumable state as JSON text.
  std::string checkpoint() const;
  /// Replaces graph, matcher state, oracle ledger/store, reports and cursor.
  void restore_checkpoint(std::string_view checkpoint_json);

 private:
  void append_report(const std::string& step_name);
  void publish(const std::string& step);
  void note(std::string message);
  std::vector<RecordPairRef> refs(std::span<const NodePair> pairs) const;
  /// Labels every unlabeled live edge of `c` in the PostFT phase.
  void label_all_edges(const Component& c, CheckKind check);
  LabelBatch ask(std::span<const NodePair> pairs, Phase phase, CheckKind check);
  void apply_labels(std::span<const NodePair> pairs, const LabelBatch& batch, bool feed_finetune);

  MatchingGraph graph_;
  Matcher& matcher_;
  Oracle& oracle_;
  CleanupConfig config_;
  StepCursor cursor_;
  std::vector<TransitiveReport> reports_;
  std::map<RecordPair, Label> ft_pairs_;
  std::vector<std::string> notes_;
  std::map<NodePair, Label> cache_;
  std::int64_t cache_generation_ = -1;

  ReportHook report_hook_;
  CheckpointHook checkpoint_hook_;
  SnapshotHook snapshot_hook_;
  LogHook log_hook_;
};

struct CleanupResult {
  MatchingGraph initial;
  MatchingGraph final_graph;
  std::vector<TransitiveReport> reports;
  BudgetLedger ledger;
};

/// Breakdown, n initial iterations, cleanup and recovery in one call.
CleanupResult run_cleanup(MatchingGraph graph, Matcher& matcher, Oracle& oracle, const CleanupConfig& config);

/// Graph with one PredictedMatch edge per pair the matcher accepts.
MatchingGraph build_graph(DatasetPtr dataset, std::span<const PairPrediction> predictions);

}  // namespace fpclean
