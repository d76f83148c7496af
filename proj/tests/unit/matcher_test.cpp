#include <gtest/gtest.h>

#include <fstream>
#include <memory>

#include "fixtures.hpp"
#include "fpclean/error.hpp"
#include "fpclean/matcher.hpp"
#include "fpclean/protocol.hpp"

namespace fpclean {
namespace {

using testing::make_dataset;

constexpr int kFrozenFpCount = 996;

SimulatedMatcherSpec two_cluster_spec() {
  SimulatedMatcherSpec s;
  s.ground_truth = {{"a", "E1"}, {"b", "E1"}, {"c", "E2"}};
  return s;
}

TEST(SimulatedMatcher, NoiselessFollowsGroundTruth) {
  SimulatedMatcher m(two_cluster_spec());
  EXPECT_EQ(m.predict("a", "b").label, Label::Match);
  EXPECT_EQ(m.predict("a", "c").label, Label::NoMatch);
  EXPECT_GE(*m.predict("a", "b").score, 0.5);
  EXPECT_LT(*m.predict("a", "c").score, 0.5);
}

TEST(SimulatedMatcher, RejectsBadRates) {
  auto s = two_cluster_spec();
  s.fp_rate = 1.5;
  EXPECT_THROW(SimulatedMatcher{s}, Error);
  s = two_cluster_spec();
  s.error_decay = 0;
  EXPECT_THROW(SimulatedMatcher{s}, Error);
}

// Monte-Carlo count over 10,000 cross-cluster pairs with noise seed 1234.
// The frozen count comes from running the hash once; the band is the
// stated tolerance around fp_rate.
TEST(SimulatedMatcher, FalsePositiveRateMonteCarlo) {
  SimulatedMatcherSpec s;
  for (int i = 0; i < 200; ++i) s.ground_truth["x" + std::to_string(i)] = "X" + std::to_string(i);
  s.fp_rate = 0.1;
  s.noise_seed = 1234;
  SimulatedMatcher m(s);
  int matches = 0, total = 0;
  for (int i = 0; i < 200 && total < 10000; ++i)
    for (int j = i + 1; j < 200 && total < 10000; ++j, ++total)
      if (m.predict("x" + std::to_string(i), "x" + std::to_string(j)).label == Label::Match) ++matches;
  ASSERT_EQ(total, 10000);
  EXPECT_NEAR(matches / 10000.0, 0.1, 0.01);
  EXPECT_EQ(matches, kFrozenFpCount);
}

TEST(SimulatedMatcher, FinetuneInstallsOverridesAndDecays) {
  auto s = two_cluster_spec();
  s.overrides[RecordPair("a", "c")] = Label::Match;  // a mispredicted pair
  s.fp_rate = 0.2;
  s.error_decay = 0.5;
  SimulatedMatcher m(s);
  ASSERT_EQ(m.predict("a", "c").label, Label::Match);
  Record a{"a", "s", {}}, c{"c", "s", {}};
  std::vector<TrainingExample> ex{{&a, &c, Label::NoMatch}};
  m.finetune(ex);
  EXPECT_EQ(m.predict("c", "a").label, Label::NoMatch);
  EXPECT_EQ(m.generation(), 1);
  m.finetune({});
  EXPECT_DOUBLE_EQ(m.fp_rate(), 0.05);
  EXPECT_EQ(m.generation(), 2);
}

TEST(SimulatedMatcher, FinetuneDisabledThrows) {
  auto s = two_cluster_spec();
  s.finetune_enabled = false;
  SimulatedMatcher m(s);
  try {
    m.finetune({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FinetuneUnsupported);
  }
}

TEST(SimulatedMatcher, StateRoundTrip) {
  auto s = two_cluster_spec();
  s.fp_rate = 0.3;
  s.error_decay = 0.5;
  SimulatedMatcher m(s);
  Record a{"a", "s", {}}, b{"b", "s", {}};
  std::vector<TrainingExample> ex{{&a, &b, Label::NoMatch}};
  m.finetune(ex);
  SimulatedMatcher copy(two_cluster_spec());
  copy.restore_state(m.save_state());
  EXPECT_EQ(copy.generation(), 1);
  EXPECT_DOUBLE_EQ(copy.fp_rate(), 0.15);
  EXPECT_EQ(copy.predict("a", "b").label, Label::NoMatch);
  EXPECT_EQ(copy.save_state(), m.save_state());
  EXPECT_THROW(copy.restore_state(R"({"kind":"external"})"), Error);
}

class NoisyMatcherProperty : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<std::string> ids;
    for (int i = 0; i < 40; ++i) ids.push_back("p" + std::to_string(100 + i));
    ds = make_dataset(ids);
    for (int i = 0; i < 40; ++i) spec.ground_truth[ids[static_cast<std::size_t>(i)]] = "E" + std::to_string(i / 4);
    spec.fp_rate = 0.3;
    spec.fn_rate = 0.3;
    spec.noise_seed = 77;
    for (std::uint32_t i = 0; i < ds->size(); ++i)
      for (std::uint32_t j = i + 1; j < ds->size(); ++j) refs.push_back({&(*ds)[i], &(*ds)[j]});
  }
  DatasetPtr ds;
  SimulatedMatcherSpec spec;
  std::vector<RecordPairRef> refs;
};

TEST_F(NoisyMatcherProperty, SymmetricInArguments) {
  SimulatedMatcher m(spec);
  for (const auto& r : refs) {
    auto ab = m.predict(r.a->record_id, r.b->record_id);
    auto ba = m.predict(r.b->record_id, r.a->record_id);
    ASSERT_EQ(ab.label, ba.label);
    ASSERT_EQ(ab.score, ba.score);
  }
}

TEST_F(NoisyMatcherProperty, BatchPartitionInvariant) {
  SimulatedMatcher m(spec);
  auto whole = m.evaluate_batch(refs);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    auto single = m.evaluate_batch(std::span(refs).subspan(i, 1));
    ASSERT_EQ(single[0].label, whole[i].label);
    ASSERT_EQ(single[0].pair, whole[i].pair);
  }
}

TEST_F(NoisyMatcherProperty, OverridesWinOverNoise) {
  SimulatedMatcher m(spec);
  std::vector<TrainingExample> ex;
  for (std::size_t i = 0; i < refs.size(); i += 3)
    ex.push_back({refs[i].a, refs[i].b, i % 2 ? Label::Match : Label::NoMatch});
  m.finetune(ex);
  for (const auto& e : ex) ASSERT_EQ(m.predict(e.a->record_id, e.b->record_id).label, e.label);
}

// Bridge stand-in: answers predict with exact-attribute equality and
// finetune with a fixed generation.
std::optional<std::string> echo_bridge(const std::string& line, std::int64_t generation) {
  auto req = protocol::decode_request(line);
  if (auto* p = std::get_if<protocol::PredictRequest>(&req)) {
    protocol::PredictReply r{p->id, {}, std::nullopt};
    for (const auto& [a, b] : p->pairs) r.preds.push_back(a.attributes == b.attributes ? Label::Match : Label::NoMatch);
    return protocol::encode(r);
  }
  if (auto* f = std::get_if<protocol::FinetuneRequest>(&req)) return protocol::encode(protocol::FinetuneReply{f->id, generation});
  return std::nullopt;
}

TEST(ExternalMatcher, GoldenFinetuneReplySetsGeneration) {
  std::ifstream in(std::string(FPCLEAN_TEST_DATA) + "/protocol_golden.ndjson");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_GE(lines.size(), 4u);
  const std::string golden_reply = lines[3];  // id 2, generation 3
  auto channel = std::make_unique<LoopbackChannel>([&](const std::string& line) -> std::optional<std::string> {
    auto req = protocol::decode_request(line);
    if (std::holds_alternative<protocol::FinetuneRequest>(req)) return golden_reply;
    return echo_bridge(line, 0);
  });
  ExternalMatcher m(std::move(channel));
  Record a{"a", "s", {{"n", "x"}}}, b{"b", "t", {{"n", "x"}}};
  std::vector<RecordPairRef> refs{{&a, &b}};
  EXPECT_EQ(m.evaluate_batch(refs)[0].label, Label::Match);  // consumes id 1
  std::vector<TrainingExample> ex{{&a, &b, Label::Match}};
  m.finetune(ex);  // id 2
  EXPECT_EQ(m.generation(), 3);
}

TEST(ExternalMatcher, BatchesRequestsAndKeepsOrder) {
  LoopbackChannel* raw = nullptr;
  auto channel = std::make_unique<LoopbackChannel>([](const std::string& l) { return echo_bridge(l, 1); });
  raw = channel.get();
  ExternalMatcher m(std::move(channel), ExternalMatcherOptions{2, std::chrono::milliseconds(10), true});
  std::vector<Record> recs{{"a", "s", {{"n", "1"}}}, {"b", "s", {{"n", "1"}}}, {"c", "s", {{"n", "2"}}}};
  std::vector<RecordPairRef> refs{{&recs[0], &recs[1]}, {&recs[0], &recs[2]}, {&recs[1], &recs[2]},
                                  {&recs[2], &recs[0]}, {&recs[1], &recs[0]}};
  auto out = m.evaluate_batch(refs);
  EXPECT_EQ(raw->sent().size(), 3u);
  std::vector<Label> labels;
  for (const auto& p : out) labels.push_back(p.label);
  EXPECT_EQ(labels, (std::vector<Label>{Label::Match, Label::NoMatch, Label::NoMatch, Label::NoMatch, Label::Match}));
  EXPECT_EQ(out[3].pair, RecordPair("a", "c"));
}

TEST(ExternalMatcher, TimeoutIsEndpointUnavailable) {
  ExternalMatcher m(std::make_unique<LoopbackChannel>([](const std::string&) { return std::nullopt; }));
  Record a{"a", "s", {}}, b{"b", "s", {}};
  std::vector<RecordPairRef> refs{{&a, &b}};
  try {
    m.evaluate_batch(refs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EndpointUnavailable);
  }
}

TEST(ExternalMatcher, WrongReplyShapeIsViolation) {
  auto wrong_count = [](const std::string& line) -> std::optional<std::string> {
    auto req = std::get<protocol::PredictRequest>(protocol::decode_request(line));
    return protocol::encode(protocol::PredictReply{req.id, {}, std::nullopt});
  };
  auto wrong_id = [](const std::string&) -> std::optional<std::string> { return R"({"v":1,"id":99,"preds":["match"]})"; };
  Record a{"a", "s", {}}, b{"b", "s", {}};
  std::vector<RecordPairRef> refs{{&a, &b}};
  for (auto handler : {LoopbackChannel::Handler(wrong_count), LoopbackChannel::Handler(wrong_id)}) {
    ExternalMatcher m(std::make_unique<LoopbackChannel>(handler));
    try {
      m.evaluate_batch(refs);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ProtocolViolation);
    }
  }
}

TEST(ExternalMatcher, StateRoundTrip) {
  ExternalMatcher m(std::make_unique<LoopbackChannel>([](const std::string& l) { return echo_bridge(l, 5); }));
  m.finetune({});
  ExternalMatcher copy(std::make_unique<LoopbackChannel>([](const std::string& l) { return echo_bridge(l, 6); }));
  copy.restore_state(m.save_state());
  EXPECT_EQ(copy.generation(), 5);
  copy.finetune({});
  EXPECT_EQ(copy.generation(), 6);
}

TEST(ProcessChannel, TalksToChildProcess) {
  ExternalMatcher m(std::make_unique<ProcessChannel>(R"(while read -r line; do echo '{"v":1,"id":1,"preds":["match"]}'; done)"),
                    ExternalMatcherOptions{8, std::chrono::milliseconds(5000), true});
  Record a{"a", "s", {}}, b{"b", "s", {}};
  std::vector<RecordPairRef> refs{{&a, &b}};
  EXPECT_EQ(m.evaluate_batch(refs)[0].label, Label::Match);
}

TEST(ProcessChannel, DeadChildIsEndpointUnavailable) {
  ExternalMatcher m(std::make_unique<ProcessChannel>("exit 0"), ExternalMatcherOptions{8, std::chrono::milliseconds(5000), true});
  Record a{"a", "s", {}}, b{"b", "s", {}};
  std::vector<RecordPairRef> refs{{&a, &b}};
  try {
    m.evaluate_batch(refs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EndpointUnavailable);
  }
}

}  // namespace
}  // namespace fpclean
