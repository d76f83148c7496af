#include "fpclean/engine.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_set>

#include "fpclean/error.hpp"
#include "fpclean/random.hpp"
#include "serialize.hpp"

namespace fpclean {

using detail::ojson;

void CleanupConfig::validate() const {
  if (n_iterations < 1) throw Error(ErrorCode::InvalidInput, "n_iterations must be at least 1");
  if (size_threshold < 2) throw Error(ErrorCode::InvalidInput, "size threshold S must be at least 2");
}

std::size_t CleanupConfig::sample_cap() const noexcept {
  return sample_cap_for_large.value_or(size_threshold * (size_threshold - 1) / 2);
}

CleanupEngine::CleanupEngine(MatchingGraph graph, Matcher& matcher, Oracle& oracle, CleanupConfig config)
    : graph_(std::move(graph)), matcher_(matcher), oracle_(oracle), config_(std::move(config)) {
  config_.validate();
}

std::string CleanupEngine::next_step_name() const {
  const std::size_t n = config_.n_iterations;
  if (cursor_.next == 0) return "breakdown";
  if (cursor_.next <= n) return "iteration_" + std::to_string(cursor_.next);
  if (cursor_.next == n + 1) return "post_cleanup";
  if (cursor_.next == n + 2) return "edge_recovery";
  return "done";
}

void CleanupEngine::run() {
  publish(next_step_name());
  while (step()) {
  }
}

bool CleanupEngine::step() {
  if (done()) return false;
  const std::size_t n = config_.n_iterations;
  const std::size_t s = cursor_.next;
  if (s == 0) large_component_breakdown();
  else if (s <= n) run_initial_iteration(s - 1);
  else if (s == n + 1) post_finetune_cleanup();
  else edge_recovery();
  ++cursor_.next;
  if (checkpoint_hook_) checkpoint_hook_(checkpoint());
  publish(next_step_name());
  return !done();
}

void CleanupEngine::note(std::string message) {
  if (log_hook_) log_hook_(message);
  notes_.push_back(std::move(message));
}

void CleanupEngine::publish(const std::string& step) {
  if (!snapshot_hook_) return;
  auto snap = std::make_shared<EngineSnapshot>();
  snap->graph = graph_;
  snap->predictions = cache_;
  snap->reports = reports_;
  snap->ledger = oracle_.ledger();
  snap->step = step;
  snap->done = done();
  snapshot_hook_(std::move(snap));
}

std::vector<RecordPairRef> CleanupEngine::refs(std::span<const NodePair> pairs) const {
  std::vector<RecordPairRef> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({&graph_.record(p.lo), &graph_.record(p.hi)});
  return out;
}

std::vector<Label> CleanupEngine::predict(std::span<const NodePair> pairs) {
  if (matcher_.generation() != cache_generation_) {
    cache_.clear();
    cache_generation_ = matcher_.generation();
  }
  std::vector<NodePair> missing;
  std::unordered_set<NodePair, NodePairHash> queued;
  for (const auto& p : pairs)
    if (!cache_.contains(p) && queued.insert(p).second) missing.push_back(p);
  if (!missing.empty()) {
    auto preds = matcher_.evaluate_batch(refs(missing));
    for (std::size_t i = 0; i < missing.size(); ++i) cache_[missing[i]] = preds[i].label;
  }
  std::vector<Label> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(cache_.at(p));
  return out;
}

ComponentEval CleanupEngine::evaluate_component(const Component& c) {
  ComponentEval eval;
  eval.component = c;
  std::vector<NodePair> pairs;
  if (c.size() > config_.size_threshold) {
    const std::uint64_t seed = stable_hash(config_.seed, {"sample", graph_.id_of(c.id),
                                                          std::to_string(matcher_.generation())});
    pairs = sample_transitive_pairs(graph_, c, config_.sample_cap(), seed);
    eval.sampled = pairs.size() < c.transitive_count();
  } else {
    pairs = transitive_pairs(graph_, c);
  }
  auto labels = predict(pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (labels[i] == Label::Match) {
      ++eval.pos;
    } else {
      ++eval.neg;
      eval.negatives.push_back(pairs[i]);
    }
  }
  return eval;
}

std::vector<ComponentEval> CleanupEngine::evaluate_components() {
  std::vector<ComponentEval> out;
  for (const auto& c : graph_.components()) out.push_back(evaluate_component(c));
  return out;
}

namespace {

ComponentReport to_report(const MatchingGraph& g, const ComponentEval& e) {
  return {g.id_of(e.component.id), e.component.size(), e.component.edge_count(), e.pos, e.neg, e.sampled};
}

}  // namespace

TransitiveReport CleanupEngine::evaluate_report(const std::string& step_name) {
  TransitiveReport r;
  r.step_name = step_name;
  for (const auto& e : evaluate_components()) {
    r.per_component.push_back(to_report(graph_, e));
    r.total_pos += e.pos;
    r.total_neg += e.neg;
  }
  r.generation = matcher_.generation();
  r.live_edges = graph_.live_edges().size();
  return r;
}

void CleanupEngine::append_report(const std::string& step_name) {
  reports_.push_back(evaluate_report(step_name));
  if (report_hook_) report_hook_(reports_.back(), graph_);
}

void CleanupEngine::large_component_breakdown() {
  append_report("pre_cleanup");
  std::vector<ComponentReport> dissolved;
  for (const auto& c : graph_.components()) {
    if (c.size() <= config_.size_threshold) continue;
    const auto& pre = reports_.back().per_component;
    auto it = std::find_if(pre.begin(), pre.end(),
                           [&](const ComponentReport& r) { return r.component_id == graph_.id_of(c.id); });
    dissolved.push_back(*it);
    graph_.remove_to_pool(c.edges);
  }
  if (!dissolved.empty())
    note("breakdown dissolved " + std::to_string(dissolved.size()) + " components above S=" +
         std::to_string(config_.size_threshold));
  reports_.push_back(evaluate_report("breakdown"));
  reports_.back().dissolved = std::move(dissolved);
  if (report_hook_) report_hook_(reports_.back(), graph_);
}

std::vector<NodePair> CleanupEngine::select_candidate_edges(const ComponentEval& eval, std::size_t iteration) const {
  const Component& c = eval.component;
  auto is_labeled = [&](NodePair e) {
    auto it = graph_.live_edges().find(e);
    return it != graph_.live_edges().end() && it->second.state == EdgeState::LabeledMatch;
  };
  std::vector<NodePair> out;
  std::set<NodePair> seen;
  auto take = [&](NodePair e) {
    if (!is_labeled(e) && seen.insert(e).second) out.push_back(e);
  };
  if (c.size() >= 2)
    for (const auto& e : min_edge_cut(graph_, c, is_labeled)) take(e);

  std::vector<NodePair> negatives = eval.negatives;
  const std::size_t want = std::min(config_.shortest_path_subset_size, negatives.size());
  Rng rng(stable_hash(config_.seed, {"paths", std::to_string(iteration), graph_.id_of(c.id)}));
  for (std::size_t i = 0; i < want; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(negatives.size() - i));
    std::swap(negatives[i], negatives[j]);
    for (const auto& e : shortest_path_edges(graph_, c, negatives[i].lo, negatives[i].hi)) take(e);
  }
  return out;
}

LabelBatch CleanupEngine::ask(std::span<const NodePair> pairs, Phase phase, CheckKind check) {
  publish(next_step_name());
  auto r = refs(pairs);
  return oracle_.label_pairs(r, phase, check);
}

void CleanupEngine::apply_labels(std::span<const NodePair> pairs, const LabelBatch& batch, bool feed_finetune) {
  std::vector<NodePair> rejected;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& res = batch.results[i];
    if (!res) continue;
    const NodePair e = pairs[i];
    if (feed_finetune) ft_pairs_[graph_.record_pair(e)] = res->label;
    if (res->label == Label::Match) {
      if (graph_.is_live(e)) graph_.mark_labeled_match(e);
    } else {
      rejected.push_back(e);
    }
  }
  graph_.reject(rejected);
}

void CleanupEngine::run_initial_iteration(std::size_t iteration) {
  oracle_.begin_iteration(iteration);
  auto evals = evaluate_components();
  std::vector<const ComponentEval*> ranked;
  for (const auto& e : evals)
    if (e.neg > 0) ranked.push_back(&e);
  std::stable_sort(ranked.begin(), ranked.end(), [](const ComponentEval* a, const ComponentEval* b) {
    if (a->neg != b->neg) return a->neg > b->neg;
    if (a->component.size() != b->component.size()) return a->component.size() > b->component.size();
    return a->component.id < b->component.id;
  });

  for (const ComponentEval* e : ranked) {
    if (oracle_.ledger().init_remaining(iteration) == 0) break;
    auto candidates = select_candidate_edges(*e, iteration);
    if (candidates.empty()) continue;
    auto batch = ask(candidates, Phase::Init, CheckKind::None);
    apply_labels(candidates, batch, true);
    if (batch.exhausted) break;
  }

  if (ft_pairs_.empty()) {
    note("iteration " + std::to_string(iteration + 1) + ": no labeled pairs, finetuning skipped");
  } else if (!matcher_.supports_finetune()) {
    note("iteration " + std::to_string(iteration + 1) + ": matcher does not support finetuning, skipped");
  } else {
    std::vector<TrainingExample> examples;
    examples.reserve(ft_pairs_.size());
    const auto& ds = graph_.dataset();
    for (const auto& [pair, label] : ft_pairs_)
      examples.push_back({&ds[ds.index_of(pair.first)], &ds[ds.index_of(pair.second)], label});
    try {
      matcher_.finetune(examples);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::FinetuneUnsupported) throw;
      note(std::string("finetuning skipped: ") + err.what());
    }
  }

  prune_pass(evaluate_components());
  append_report("iteration_" + std::to_string(iteration + 1));
}

std::size_t CleanupEngine::prune_pass(const std::vector<ComponentEval>& evals) {
  auto is_labeled = [&](NodePair e) {
    auto it = graph_.live_edges().find(e);
    return it != graph_.live_edges().end() && it->second.state == EdgeState::LabeledMatch;
  };
  std::size_t removed = 0;
  for (const auto& e : evals) {
    if (e.neg <= e.pos) continue;
    auto cut = min_edge_cut(graph_, e.component, is_labeled);
    removed += graph_.remove_to_pool(cut).edges.size();
  }
  return removed;
}

void CleanupEngine::label_all_edges(const Component& c, CheckKind check) {
  std::vector<NodePair> unlabeled;
  for (const auto& e : c.edges)
    if (graph_.live_edges().at(e).state == EdgeState::PredictedMatch) unlabeled.push_back(e);
  if (unlabeled.empty()) return;
  auto batch = ask(unlabeled, Phase::PostFT, check);
  apply_labels(unlabeled, batch, false);
}

void CleanupEngine::post_finetune_cleanup() {
  while (prune_pass(evaluate_components()) > 0) {
  }

  for (const auto& c : graph_.components())
    if (c.size() > config_.size_threshold) label_all_edges(c, CheckKind::SizeCheck);

  {
    const auto index = graph_.component_index();
    const auto& ds = graph_.dataset();
    std::set<NodeId> flagged;
    for (const auto& [pair, rec] : oracle_.store().current()) {
      if (rec.label != Label::NoMatch) continue;
      auto a = ds.find(pair.first);
      auto b = ds.find(pair.second);
      if (!a || !b) continue;
      if (index[*a] == index[*b] && !graph_.neighbors(*a).empty()) flagged.insert(index[*a]);
    }
    for (const auto& c : graph_.components())
      if (flagged.contains(c.id) && !graph_.fully_labeled(c)) label_all_edges(c, CheckKind::LabeledTransCheck);
  }

  for (const auto& e : evaluate_components())
    if (e.neg > 0 && !graph_.fully_labeled(e.component)) label_all_edges(e.component, CheckKind::FinalTransCheck);

  append_report("post_cleanup");
}

void CleanupEngine::edge_recovery() {
  std::vector<NodePair> pool;
  for (const auto& [p, e] : graph_.removed_pool()) pool.push_back(p);
  auto labels = predict(pool);
  struct Candidate {
    NodePair edge;
    std::optional<double> score;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (labels[i] == Label::Match) candidates.push_back({pool[i], graph_.removed_pool().at(pool[i]).origin_score});
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score.has_value() != b.score.has_value()) return a.score.has_value();
    if (a.score && *a.score != *b.score) return *a.score > *b.score;
    return a.edge < b.edge;
  });

  // Union-find over current components, with member lists for the
  // transitive pairs a merge would create.
  const std::size_t n = graph_.node_count();
  std::vector<NodeId> parent(n);
  std::iota(parent.begin(), parent.end(), NodeId{0});
  std::vector<std::vector<NodeId>> members(n);
  auto find = [&](NodeId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](NodeId a, NodeId b) {
    NodeId ra = find(a), rb = find(b);
    if (ra == rb) return;
    if (members[ra].size() < members[rb].size()) std::swap(ra, rb);
    parent[rb] = ra;
    members[ra].insert(members[ra].end(), members[rb].begin(), members[rb].end());
    members[rb].clear();
    members[rb].shrink_to_fit();
  };
  for (NodeId i = 0; i < n; ++i) members[i].push_back(i);
  for (const auto& [p, e] : graph_.live_edges()) unite(p.lo, p.hi);

  std::size_t restored = 0, labeled = 0, skipped = 0;
  for (const auto& cand : candidates) {
    const NodePair e = cand.edge;
    const NodeId ru = find(e.lo), rv = find(e.hi);
    if (ru == rv) continue;
    bool need_label = false;
    if (members[ru].size() + members[rv].size() > config_.size_threshold) {
      need_label = true;
    } else {
      std::vector<NodePair> fresh;
      for (NodeId x : members[ru])
        for (NodeId y : members[rv])
          if (NodePair(x, y) != e) fresh.push_back(NodePair(x, y));
      if (fresh.empty()) {
        need_label = true;
      } else {
        bool all_match = true;
        for (const auto& p : fresh)
          if (oracle_.stored(graph_.record_pair(p)) == Label::NoMatch) all_match = false;
        if (all_match) {
          auto preds = predict(fresh);
          all_match = std::all_of(preds.begin(), preds.end(), [](Label l) { return l == Label::Match; });
        }
        if (all_match) {
          graph_.restore(e, EdgeState::PredictedMatch);
          unite(e.lo, e.hi);
          ++restored;
          continue;
        }
        need_label = true;
      }
    }
    if (!need_label) continue;
    if (oracle_.ledger().recovery_remaining() == 0 && !oracle_.stored(graph_.record_pair(e))) {
      ++skipped;
      continue;
    }
    const NodePair one[] = {e};
    auto batch = ask(one, Phase::Recovery, CheckKind::None);
    if (!batch.results[0]) {
      ++skipped;
      continue;
    }
    ++labeled;
    if (batch.results[0]->label == Label::Match) {
      graph_.restore(e, EdgeState::LabeledMatch);
      unite(e.lo, e.hi);
      ++restored;
    } else {
      graph_.reject(one);
    }
  }
  note("edge recovery: " + std::to_string(candidates.size()) + " candidates, " + std::to_string(restored) +
       " restored, " + std::to_string(labeled) + " labeled, " + std::to_string(skipped) + " skipped for budget");
  append_report("edge_recovery");
}

std::string CleanupEngine::checkpoint() const {
  ojson j = detail::header("checkpoint");
  ojson cfg;
  cfg["n_iterations"] = config_.n_iterations;
  cfg["size_threshold"] = config_.size_threshold;
  cfg["lb_total"] = config_.lb_total;
  cfg["seed"] = config_.seed;
  cfg["sample_cap"] = config_.sample_cap();
  cfg["shortest_path_subset_size"] = config_.shortest_path_subset_size;
  j["config"] = std::move(cfg);
  j["next_step"] = cursor_.next;
  j["graph"] = detail::graph_to_json(graph_);
  j["matcher"] = ojson::parse(matcher_.save_state());
  j["ledger"] = detail::ledger_to_json(oracle_.ledger());
  auto labels = ojson::array();
  for (const auto& r : oracle_.store().history()) labels.push_back(detail::label_to_json(r));
  std::vector<LabelRecord> current;
  for (const auto& [p, r] : oracle_.store().current()) current.push_back(r);
  std::sort(current.begin(), current.end(), [](const LabelRecord& a, const LabelRecord& b) { return a.ts < b.ts; });
  for (const auto& r : current) labels.push_back(detail::label_to_json(r));
  j["labels"] = std::move(labels);
  j["next_ts"] = oracle_.next_ts();
  auto ft = ojson::array();
  for (const auto& [p, l] : ft_pairs_) ft.push_back({p.first, p.second, std::string(to_string(l))});
  j["ft_pairs"] = std::move(ft);
  auto reports = ojson::array();
  for (const auto& r : reports_) reports.push_back(detail::report_to_json(r));
  j["reports"] = std::move(reports);
  j["notes"] = notes_;
  return j.dump();
}

void CleanupEngine::restore_checkpoint(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  detail::expect_header(j, "checkpoint");
  try {
    const auto& cfg = j.at("config");
    if (cfg.at("n_iterations").get<std::size_t>() != config_.n_iterations ||
        cfg.at("size_threshold").get<std::size_t>() != config_.size_threshold ||
        cfg.at("lb_total").get<std::size_t>() != config_.lb_total ||
        cfg.at("seed").get<std::uint64_t>() != config_.seed ||
        cfg.at("sample_cap").get<std::size_t>() != config_.sample_cap() ||
        cfg.at("shortest_path_subset_size").get<std::size_t>() != config_.shortest_path_subset_size)
      throw Error(ErrorCode::InvalidInput, "checkpoint was written with a different configuration");
    MatchingGraph g = detail::graph_from_json(j.at("graph"), graph_.dataset_ptr());
    matcher_.restore_state(j.at("matcher").dump());
    std::vector<LabelRecord> labels;
    for (const auto& l : j.at("labels")) labels.push_back(detail::label_from_json(l));
    oracle_.restore(detail::ledger_from_json(j.at("ledger")), labels, j.at("next_ts").get<std::uint64_t>());
    ft_pairs_.clear();
    for (const auto& f : j.at("ft_pairs")) {
      auto label = parse_label(f.at(2).get<std::string>());
      if (!label) throw Error(ErrorCode::InvalidInput, "bad finetune label in checkpoint");
      ft_pairs_[RecordPair(f.at(0).get<std::string>(), f.at(1).get<std::string>())] = *label;
    }
    reports_.clear();
    for (const auto& r : j.at("reports")) reports_.push_back(detail::report_from_json(r));
    notes_ = j.at("notes").get<std::vector<std::string>>();
    cursor_.next = j.at("next_step").get<std::size_t>();
    graph_ = std::move(g);
    cache_.clear();
    cache_generation_ = -1;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed checkpoint: ") + e.what());
  }
}

CleanupResult run_cleanup(MatchingGraph graph, Matcher& matcher, Oracle& oracle, const CleanupConfig& config) {
  CleanupResult result;
  result.initial = graph;
  CleanupEngine engine(std::move(graph), matcher, oracle, config);
  engine.run();
  result.final_graph = engine.graph();
  result.reports = engine.reports();
  result.ledger = oracle.ledger();
  return result;
}

MatchingGraph build_graph(DatasetPtr dataset, std::span<const PairPrediction> predictions) {
  MatchingGraph g(std::move(dataset));
  for (const auto& p : predictions)
    if (p.label == Label::Match) g.add_edge(g.pair_of(p.pair.first, p.pair.second), EdgeState::PredictedMatch, p.score);
  return g;
}

}  // namespace fpclean
