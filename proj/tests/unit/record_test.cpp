#include <gtest/gtest.h>

#include "fpclean/error.hpp"
#include "fpclean/record.hpp"

namespace fpclean {
namespace {

TEST(RecordPair, StoresIdsInCanonicalOrder) {
  RecordPair p("r2", "r1");
  EXPECT_EQ(p.first, "r1");
  EXPECT_EQ(p.second, "r2");
  EXPECT_EQ(p, RecordPair("r1", "r2"));
}

TEST(RecordPair, KeyRoundTrips) {
  RecordPair p("b", "a");
  EXPECT_EQ(p.key(), "a::b");
  EXPECT_EQ(RecordPair::from_key("a::b"), p);
  EXPECT_EQ(RecordPair::from_key("b::a"), p);
}

TEST(RecordPair, RejectsMalformedKeys) {
  EXPECT_FALSE(RecordPair::from_key("ab"));
  EXPECT_FALSE(RecordPair::from_key("::b"));
  EXPECT_FALSE(RecordPair::from_key("a::"));
  EXPECT_FALSE(RecordPair::from_key("a::b::c"));
}

TEST(Label, WireFormRoundTrips) {
  EXPECT_EQ(to_string(Label::Match), "match");
  EXPECT_EQ(to_string(Label::NoMatch), "nomatch");
  EXPECT_EQ(parse_label("match"), Label::Match);
  EXPECT_EQ(parse_label("nomatch"), Label::NoMatch);
  EXPECT_FALSE(parse_label("Match"));
}

TEST(Dataset, SortsByRecordId) {
  Dataset ds({{"r3", "s", {}}, {"r1", "s", {}}, {"r2", "s", {}}});
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds[0].record_id, "r1");
  EXPECT_EQ(ds[2].record_id, "r3");
  EXPECT_EQ(ds.index_of("r2"), 1u);
  EXPECT_FALSE(ds.find("r9"));
}

TEST(Dataset, RejectsDuplicateIds) {
  try {
    Dataset ds({{"r1", "a", {}}, {"r1", "b", {}}});
    FAIL() << "duplicate ids accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

TEST(Dataset, UnknownIdThrowsInvalidInput) {
  Dataset ds(std::vector<Record>{{"r1", "a", {}}});
  EXPECT_THROW(ds.index_of("nope"), Error);
}

TEST(Record, EqualityIsByIdOnly) {
  Record a{"r1", "s1", {{"name", "x"}}};
  Record b{"r1", "s2", {{"name", "y"}}};
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace fpclean
