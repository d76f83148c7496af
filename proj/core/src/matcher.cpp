#include "fpclean/matcher.hpp"

#include <string>

#include <nlohmann/json.hpp>

#include "fpclean/error.hpp"
#include "fpclean/protocol.hpp"
#include "fpclean/random.hpp"

namespace fpclean {

namespace {

constexpr std::uint64_t kScoreSalt = 0x5c0e5a17ULL;

}  // namespace

SimulatedMatcher::SimulatedMatcher(SimulatedMatcherSpec spec) : spec_(std::move(spec)) {
  if (spec_.fp_rate < 0 || spec_.fp_rate > 1 || spec_.fn_rate < 0 || spec_.fn_rate > 1)
    throw Error(ErrorCode::InvalidInput, "error rates must lie in [0, 1]");
  if (!(spec_.error_decay > 0 && spec_.error_decay <= 1))
    throw Error(ErrorCode::InvalidInput, "error_decay must lie in (0, 1]");
}

PairPrediction SimulatedMatcher::predict(const std::string& a, const std::string& b) const {
  PairPrediction p;
  p.pair = RecordPair(a, b);
  const std::string gen = std::to_string(generation_);
  const double noise = unit_interval(stable_hash(spec_.noise_seed, {gen, p.pair.first, p.pair.second}));
  const double jitter = unit_interval(stable_hash(spec_.noise_seed ^ kScoreSalt, {gen, p.pair.first, p.pair.second}));

  if (auto it = spec_.overrides.find(p.pair); it != spec_.overrides.end()) {
    p.label = it->second;
  } else {
    auto ea = spec_.ground_truth.find(p.pair.first);
    auto eb = spec_.ground_truth.find(p.pair.second);
    const bool same = ea != spec_.ground_truth.end() && eb != spec_.ground_truth.end() && ea->second == eb->second;
    if (same)
      p.label = noise < spec_.fn_rate ? Label::NoMatch : Label::Match;
    else
      p.label = noise < spec_.fp_rate ? Label::Match : Label::NoMatch;
  }
  p.score = p.label == Label::Match ? 0.5 + 0.5 * jitter : 0.5 * jitter;
  return p;
}

std::vector<PairPrediction> SimulatedMatcher::evaluate_batch(std::span<const RecordPairRef> pairs) {
  std::vector<PairPrediction> out;
  out.reserve(pairs.size());
  for (const auto& ref : pairs) out.push_back(predict(ref.a->record_id, ref.b->record_id));
  return out;
}

void SimulatedMatcher::finetune(std::span<const TrainingExample> labeled) {
  if (!spec_.finetune_enabled) throw Error(ErrorCode::FinetuneUnsupported, "simulated matcher has finetuning disabled");
  for (const auto& ex : labeled) spec_.overrides[RecordPair(ex.a->record_id, ex.b->record_id)] = ex.label;
  spec_.fp_rate *= spec_.error_decay;
  spec_.fn_rate *= spec_.error_decay;
  ++generation_;
}

std::string SimulatedMatcher::save_state() const {
  nlohmann::ordered_json j;
  j["kind"] = "simulated";
  j["generation"] = generation_;
  j["fp_rate"] = spec_.fp_rate;
  j["fn_rate"] = spec_.fn_rate;
  auto overrides = nlohmann::ordered_json::array();
  for (const auto& [pair, label] : spec_.overrides)
    overrides.push_back({pair.first, pair.second, std::string(to_string(label))});
  j["overrides"] = std::move(overrides);
  return j.dump();
}

void SimulatedMatcher::restore_state(std::string_view state) {
  try {
    auto j = nlohmann::json::parse(state);
    if (j.at("kind") != "simulated") throw Error(ErrorCode::InvalidInput, "checkpoint holds a different matcher kind");
    generation_ = j.at("generation").get<std::int64_t>();
    spec_.fp_rate = j.at("fp_rate").get<double>();
    spec_.fn_rate = j.at("fn_rate").get<double>();
    spec_.overrides.clear();
    for (const auto& o : j.at("overrides")) {
      auto label = parse_label(o.at(2).get<std::string>());
      if (!label) throw Error(ErrorCode::InvalidInput, "bad override label in checkpoint");
      spec_.overrides[RecordPair(o.at(0).get<std::string>(), o.at(1).get<std::string>())] = *label;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad matcher state: ") + e.what());
  }
}

ExternalMatcher::ExternalMatcher(std::unique_ptr<LineChannel> channel, ExternalMatcherOptions options)
    : channel_(std::move(channel)), options_(options) {
  if (!channel_) throw Error(ErrorCode::InvalidInput, "external matcher needs a channel");
  if (options_.batch_size == 0) options_.batch_size = 1;
}

std::string ExternalMatcher::round_trip(const std::string& request) {
  channel_->send_line(request);
  auto reply = channel_->receive_line(options_.timeout);
  if (!reply) throw Error(ErrorCode::EndpointUnavailable, "matcher endpoint timed out");
  return *reply;
}

std::vector<PairPrediction> ExternalMatcher::evaluate_batch(std::span<const RecordPairRef> pairs) {
  std::vector<PairPrediction> out;
  out.reserve(pairs.size());
  for (std::size_t begin = 0; begin < pairs.size(); begin += options_.batch_size) {
    const std::size_t end = std::min(pairs.size(), begin + options_.batch_size);
    protocol::PredictRequest request;
    request.id = next_id_++;
    for (std::size_t i = begin; i < end; ++i) request.pairs.emplace_back(*pairs[i].a, *pairs[i].b);
    const std::string raw = round_trip(protocol::encode(request));
    auto reply = protocol::decode_predict_reply(raw);
    if (reply.id != request.id) throw ProtocolError("reply id does not echo request id", raw);
    if (reply.preds.size() != end - begin) throw ProtocolError("reply carries the wrong number of predictions", raw);
    for (std::size_t i = begin; i < end; ++i) {
      PairPrediction p;
      p.pair = RecordPair(pairs[i].a->record_id, pairs[i].b->record_id);
      p.label = reply.preds[i - begin];
      if (reply.scores) p.score = (*reply.scores)[i - begin];
      out.push_back(std::move(p));
    }
  }
  return out;
}

void ExternalMatcher::finetune(std::span<const TrainingExample> labeled) {
  if (!options_.finetune_enabled) throw Error(ErrorCode::FinetuneUnsupported, "endpoint does not support finetuning");
  protocol::FinetuneRequest request;
  request.id = next_id_++;
  for (const auto& ex : labeled) request.examples.push_back({*ex.a, *ex.b, ex.label});
  const std::string raw = round_trip(protocol::encode(request));
  auto reply = protocol::decode_finetune_reply(raw);
  if (reply.id != request.id) throw ProtocolError("reply id does not echo request id", raw);
  if (reply.generation < generation_) throw ProtocolError("generation went backwards", raw);
  generation_ = reply.generation;
}

std::string ExternalMatcher::save_state() const {
  nlohmann::ordered_json j;
  j["kind"] = "external";
  j["generation"] = generation_;
  j["next_id"] = next_id_;
  return j.dump();
}

void ExternalMatcher::restore_state(std::string_view state) {
  try {
    auto j = nlohmann::json::parse(state);
    if (j.at("kind") != "external") throw Error(ErrorCode::InvalidInput, "checkpoint holds a different matcher kind");
    generation_ = j.at("generation").get<std::int64_t>();
    next_id_ = j.at("next_id").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad matcher state: ") + e.what());
  }
}

}  // namespace fpclean
