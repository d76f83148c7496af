#include "fpclean/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fpclean/error.hpp"
#include "fpclean/protocol.hpp"
#include "fpclean/random.hpp"

namespace fpclean {

std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Init: return "init";
    case Phase::PostFT: return "postft";
    case Phase::Recovery: return "recovery";
  }
  return "init";
}

std::string_view to_string(CheckKind c) noexcept {
  switch (c) {
    case CheckKind::None: return "none";
    case CheckKind::SizeCheck: return "size_check";
    case CheckKind::LabeledTransCheck: return "labeled_trans_check";
    case CheckKind::FinalTransCheck: return "final_trans_check";
  }
  return "none";
}

std::string_view to_string(LabelSourceKind s) noexcept {
  switch (s) {
    case LabelSourceKind::GroundTruth: return "groundtruth";
    case LabelSourceKind::Human: return "human";
    case LabelSourceKind::LLM: return "llm";
    case LabelSourceKind::Replay: return "replay";
  }
  return "groundtruth";
}

std::optional<Phase> parse_phase(std::string_view s) noexcept {
  if (s == "init") return Phase::Init;
  if (s == "postft") return Phase::PostFT;
  if (s == "recovery") return Phase::Recovery;
  return std::nullopt;
}

std::optional<CheckKind> parse_check(std::string_view s) noexcept {
  if (s == "none") return CheckKind::None;
  if (s == "size_check") return CheckKind::SizeCheck;
  if (s == "labeled_trans_check") return CheckKind::LabeledTransCheck;
  if (s == "final_trans_check") return CheckKind::FinalTransCheck;
  return std::nullopt;
}

std::optional<LabelSourceKind> parse_source(std::string_view s) noexcept {
  if (s == "groundtruth") return LabelSourceKind::GroundTruth;
  if (s == "human") return LabelSourceKind::Human;
  if (s == "llm") return LabelSourceKind::LLM;
  if (s == "replay") return LabelSourceKind::Replay;
  return std::nullopt;
}

// ---------------------------------------------------------------- ledger

BudgetLedger BudgetLedger::with_defaults(std::size_t lb_total, std::size_t iterations, std::size_t safety_factor) {
  BudgetLedger l;
  l.lb_total = lb_total;
  l.lb_init_cap = lb_total / 2;
  l.per_iteration_cap = iterations == 0 ? 0 : l.lb_init_cap / iterations;
  l.safety_limit = std::max<std::size_t>(safety_factor * lb_total, 1);
  l.spent_per_iteration.assign(iterations, 0);
  return l;
}

std::size_t BudgetLedger::recovery_budget() const noexcept {
  const std::size_t used = spent_init + spent_postft();
  return used >= lb_total ? 0 : lb_total - used;
}

std::size_t BudgetLedger::recovery_remaining() const noexcept {
  const std::size_t budget = recovery_budget();
  return spent_recovery >= budget ? 0 : budget - spent_recovery;
}

std::size_t BudgetLedger::init_remaining(std::size_t iteration) const noexcept {
  const std::size_t in_iter = iteration < spent_per_iteration.size() ? spent_per_iteration[iteration] : 0;
  const std::size_t iter_left = in_iter >= per_iteration_cap ? 0 : per_iteration_cap - in_iter;
  const std::size_t total_left = spent_init >= lb_init_cap ? 0 : lb_init_cap - spent_init;
  return std::min(iter_left, total_left);
}

// ---------------------------------------------------------------- store

std::optional<LabelRecord> LabelStore::find(const RecordPair& pair) const {
  auto it = current_.find(pair);
  if (it == current_.end()) return std::nullopt;
  return it->second;
}

const LabelRecord& LabelStore::record(LabelRecord rec) {
  auto it = current_.find(rec.pair);
  if (it == current_.end()) return current_.emplace(rec.pair, std::move(rec)).first->second;
  if (it->second.source == LabelSourceKind::LLM && rec.source == LabelSourceKind::Human) {
    LabelRecord old = it->second;
    old.superseded = true;
    history_.push_back(std::move(old));
    it->second = std::move(rec);
  }
  return it->second;
}

// ---------------------------------------------------------------- sources

Label GroundTruthSource::label(const Record& a, const Record& b) {
  auto ea = assignment_.find(a.record_id);
  auto eb = assignment_.find(b.record_id);
  if (ea == assignment_.end() || eb == assignment_.end()) return Label::NoMatch;
  return ea->second == eb->second ? Label::Match : Label::NoMatch;
}

NoisySource::NoisySource(std::unordered_map<std::string, std::string> assignment, double flip_rate, std::uint64_t seed)
    : truth_(std::move(assignment)), flip_rate_(flip_rate), seed_(seed) {
  if (flip_rate < 0 || flip_rate > 1) throw Error(ErrorCode::InvalidInput, "flip rate must lie in [0, 1]");
}

Label NoisySource::label(const Record& a, const Record& b) {
  Label truth = truth_.label(a, b);
  RecordPair p(a.record_id, b.record_id);
  if (unit_interval(stable_hash(seed_, {"flip", p.first, p.second})) < flip_rate_)
    return truth == Label::Match ? Label::NoMatch : Label::Match;
  return truth;
}

ReplaySource::ReplaySource(std::vector<LabelRecord> log) : log_(std::move(log)) {}

Label ReplaySource::label(const Record& a, const Record& b) {
  RecordPair asked(a.record_id, b.record_id);
  if (next_ >= log_.size())
    throw Error(ErrorCode::ReplayDivergence, "replay log exhausted at request for " + asked.key());
  const auto& rec = log_[next_];
  if (!(rec.pair == asked))
    throw Error(ErrorCode::ReplayDivergence,
                "replay expected " + rec.pair.key() + " but the run asked for " + asked.key());
  ++next_;
  return rec.label;
}

std::string serialize_for_prompt(const Record& r) {
  std::string out;
  for (const auto& [k, v] : r.attributes) {
    if (!out.empty()) out += ", ";
    out += k;
    out += ": ";
    out += v;
  }
  return out;
}

std::string build_llm_prompt(const Record& a, const Record& b) {
  return "Do these two records represent the same entity? Answer only Yes or No, do not elaborate further. "
         "First record: [" + serialize_for_prompt(a) + "] Second Record: [" + serialize_for_prompt(b) + "]";
}

Label parse_llm_reply(std::string_view text) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lowered.find("yes") != std::string::npos ? Label::Match : Label::NoMatch;
}

LlmSource::LlmSource(std::unique_ptr<LineChannel> channel, LlmSourceOptions options)
    : channel_(std::move(channel)), options_(options) {
  if (!channel_) throw Error(ErrorCode::InvalidInput, "LLM source needs a channel");
}

Label LlmSource::label(const Record& a, const Record& b) {
  protocol::PseudolabelRequest request{next_id_++, build_llm_prompt(a, b)};
  channel_->send_line(protocol::encode(request));
  auto line = channel_->receive_line(options_.timeout);
  if (!line) {
    if (!options_.fallback_to_nomatch) throw Error(ErrorCode::EndpointUnavailable, "pseudo-labeler timed out");
    ++fallbacks_;
    return Label::NoMatch;
  }
  auto reply = protocol::decode_pseudolabel_reply(*line);
  if (reply.id != request.id) throw ProtocolError("reply id does not echo request id", *line);
  return parse_llm_reply(reply.text);
}

// ---------------------------------------------------------------- human queue

HumanQueue::HumanQueue(std::optional<std::filesystem::path> path) : path_(std::move(path)) {
  if (!path_ || !std::filesystem::exists(*path_)) return;
  std::ifstream in(*path_);
  try {
    auto j = nlohmann::json::parse(in);
    if (j.value("version", 0) != 1) throw Error(ErrorCode::InvalidInput, "unsupported human queue file version");
    for (const auto& p : j.at("pending"))
      pending_[RecordPair(p.at(0).get<std::string>(), p.at(1).get<std::string>())] = p.at(2).get<std::uint64_t>();
    for (const auto& a : j.at("answered")) {
      auto label = parse_label(a.at(2).get<std::string>());
      if (!label) throw Error(ErrorCode::InvalidInput, "bad label in human queue file");
      answered_[RecordPair(a.at(0).get<std::string>(), a.at(1).get<std::string>())] = *label;
    }
    next_order_ = j.at("next_order").get<std::uint64_t>();
    resolved_ = j.at("resolved").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("corrupt human queue file: ") + e.what());
  }
}

void HumanQueue::persist() const {
  if (!path_) return;
  nlohmann::ordered_json j;
  j["format"] = "fpclean.human_queue";
  j["version"] = 1;
  auto pending = nlohmann::ordered_json::array();
  for (const auto& [pair, order] : pending_) pending.push_back({pair.first, pair.second, order});
  j["pending"] = std::move(pending);
  auto answered = nlohmann::ordered_json::array();
  for (const auto& [pair, label] : answered_) answered.push_back({pair.first, pair.second, std::string(to_string(label))});
  j["answered"] = std::move(answered);
  j["next_order"] = next_order_;
  j["resolved"] = resolved_;
  auto tmp = *path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, *path_);
}

void HumanQueue::push(const RecordPair& pair) {
  std::lock_guard lock(mutex_);
  if (pending_.contains(pair) || answered_.contains(pair)) return;
  pending_[pair] = next_order_++;
  persist();
}

void HumanQueue::resolve(const RecordPair& pair, Label label) {
  {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(pair);
    if (it == pending_.end()) throw Error(ErrorCode::NotPending, "pair is not pending: " + pair.key());
    pending_.erase(it);
    answered_[pair] = label;
    ++resolved_;
    persist();
  }
  cv_.notify_all();
}

std::optional<Label> HumanQueue::try_take(const RecordPair& pair) {
  std::lock_guard lock(mutex_);
  auto it = answered_.find(pair);
  if (it == answered_.end()) return std::nullopt;
  Label label = it->second;
  answered_.erase(it);
  persist();
  return label;
}

Label HumanQueue::wait(const RecordPair& pair) {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return closed_ || answered_.contains(pair); });
  auto it = answered_.find(pair);
  if (it == answered_.end()) throw Error(ErrorCode::EndpointUnavailable, "human queue closed");
  Label label = it->second;
  answered_.erase(it);
  persist();
  return label;
}

std::vector<HumanQueue::Item> HumanQueue::pending() const {
  std::lock_guard lock(mutex_);
  std::vector<Item> items;
  for (const auto& [pair, order] : pending_) items.push_back({pair, order});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.order < b.order; });
  return items;
}

std::size_t HumanQueue::resolved_count() const {
  std::lock_guard lock(mutex_);
  return resolved_;
}

void HumanQueue::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

void HumanSource::prepare(std::span<const RecordPairRef> pairs) {
  for (const auto& p : pairs) queue_.push(RecordPair(p.a->record_id, p.b->record_id));
}

Label HumanSource::label(const Record& a, const Record& b) {
  RecordPair pair(a.record_id, b.record_id);
  queue_.push(pair);
  return queue_.wait(pair);
}

// ---------------------------------------------------------------- oracle

Oracle::Oracle(std::unique_ptr<LabelSource> source, BudgetLedger ledger)
    : source_(std::move(source)), ledger_(std::move(ledger)) {
  if (!source_) throw Error(ErrorCode::InvalidInput, "oracle needs a label source");
}

void Oracle::set_phase_source(Phase phase, std::unique_ptr<LabelSource> source) {
  phase_sources_[phase] = std::move(source);
}

void Oracle::preload_answers(std::vector<LabelRecord> answers) {
  for (auto& a : answers) preloaded_[a.pair] = std::move(a);
}

void Oracle::begin_iteration(std::size_t iteration) {
  current_iteration_ = iteration;
  if (ledger_.spent_per_iteration.size() <= iteration) ledger_.spent_per_iteration.resize(iteration + 1, 0);
}

LabelSource& Oracle::source_for(Phase phase) {
  auto it = phase_sources_.find(phase);
  return it != phase_sources_.end() && it->second ? *it->second : *source_;
}

std::size_t Oracle::remaining(Phase phase) const {
  switch (phase) {
    case Phase::Init: return ledger_.init_remaining(current_iteration_);
    case Phase::Recovery: return ledger_.recovery_remaining();
    case Phase::PostFT: return SIZE_MAX;
  }
  return 0;
}

void Oracle::charge(Phase phase, CheckKind check) {
  switch (phase) {
    case Phase::Init:
      ++ledger_.spent_init;
      ++ledger_.spent_per_iteration[current_iteration_];
      break;
    case Phase::Recovery: ++ledger_.spent_recovery; break;
    case Phase::PostFT:
      if (ledger_.spent_postft() >= ledger_.safety_limit)
        throw Error(ErrorCode::SafetyLimitExceeded,
                    "post-finetune labeling exceeded the safety limit of " + std::to_string(ledger_.safety_limit) +
                        " labels (spent: size check " + std::to_string(ledger_.spent_size_check) +
                        ", labeled transitive check " + std::to_string(ledger_.spent_labeled_trans_check) +
                        ", final transitive check " + std::to_string(ledger_.spent_final_trans_check) + ")");
      if (check == CheckKind::SizeCheck) ++ledger_.spent_size_check;
      else if (check == CheckKind::LabeledTransCheck) ++ledger_.spent_labeled_trans_check;
      else ++ledger_.spent_final_trans_check;
      break;
  }
}

LabelBatch Oracle::label_pairs(std::span<const RecordPairRef> pairs, Phase phase, CheckKind check) {
  if (phase == Phase::Init && ledger_.spent_per_iteration.size() <= current_iteration_)
    ledger_.spent_per_iteration.resize(current_iteration_ + 1, 0);

  LabelBatch batch;
  batch.results.resize(pairs.size());

  // Decide up front which pairs will be asked, so sources that queue work
  // (humans) only see what the budget can pay for.
  std::vector<std::size_t> to_ask;
  std::size_t budget = remaining(phase);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    RecordPair pair(pairs[i].a->record_id, pairs[i].b->record_id);
    if (auto rec = store_.find(pair)) {
      batch.results[i] = *rec;
      continue;
    }
    bool duplicate = false;
    for (auto j : to_ask)
      if (RecordPair(pairs[j].a->record_id, pairs[j].b->record_id) == pair) duplicate = true;
    if (duplicate) continue;
    if (budget == 0) {
      batch.deferred.push_back(i);
      batch.exhausted = true;
      continue;
    }
    if (budget != SIZE_MAX) --budget;
    to_ask.push_back(i);
  }

  LabelSource& source = source_for(phase);
  std::vector<RecordPairRef> prepared;
  for (auto i : to_ask)
    if (!preloaded_.contains(RecordPair(pairs[i].a->record_id, pairs[i].b->record_id))) prepared.push_back(pairs[i]);
  if (!prepared.empty()) source.prepare(prepared);

  for (auto i : to_ask) {
    RecordPair pair(pairs[i].a->record_id, pairs[i].b->record_id);
    LabelRecord rec;
    if (auto pre = preloaded_.find(pair); pre != preloaded_.end()) {
      rec = pre->second;
      preloaded_.erase(pre);
    } else {
      rec.pair = pair;
      rec.label = source.label(*pairs[i].a, *pairs[i].b);
      rec.source = source.kind();
    }
    rec.phase = phase;
    rec.check = phase == Phase::PostFT ? check : CheckKind::None;
    rec.ts = next_ts_++;
    charge(phase, rec.check);
    const auto& stored = store_.record(rec);
    batch.results[i] = stored;
    ++batch.newly_labeled;
    if (listener_) listener_(stored);
    ++session_labels_;
    if (halt_after_ && session_labels_ >= *halt_after_)
      throw Error(ErrorCode::Interrupted, "halted after " + std::to_string(session_labels_) + " labels");
  }
  // Fill duplicates of pairs labeled within this batch.
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (batch.results[i]) continue;
    if (auto rec = store_.find(RecordPair(pairs[i].a->record_id, pairs[i].b->record_id))) batch.results[i] = *rec;
  }
  return batch;
}

std::optional<Label> Oracle::stored(const RecordPair& pair) const {
  if (auto rec = store_.find(pair)) return rec->label;
  return std::nullopt;
}

void Oracle::restore(BudgetLedger ledger, const std::vector<LabelRecord>& records, std::uint64_t next_ts) {
  ledger_ = std::move(ledger);
  store_ = LabelStore{};
  for (const auto& r : records) store_.record(r);
  next_ts_ = next_ts;
}

}  // namespace fpclean
