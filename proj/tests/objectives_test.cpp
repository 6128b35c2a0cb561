// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "motiac/objectives.hpp"

namespace motiac::objectives {
namespace {

struct RewardCase {
  double x;
  double want;
};

TEST(RewardCpa, TableValues) {
  const RewardCase cases[] = {{0.5, 1.0},   {1.0, 1.0},   {1.1, -0.1}, {1.2, -0.2},
                              {1.3, -1.69}, {1.4, -1.96}, {1.5, -2.0}, {kInfinity, -2.0}};
  for (const auto& c : cases) EXPECT_NEAR(RewardCpa(c.x), c.want, 1e-12) << c.x;
}

TEST(RewardCpa, PieceBoundaries) {
  EXPECT_EQ(RewardCpa(0.0), 1.0);
  EXPECT_NEAR(RewardCpa(1.0 + 1e-12), -1e-12, 1e-15);
  // Left-closed at 1.2 and 1.4: the upper piece starts just past the knot.
  EXPECT_NEAR(RewardCpa(1.2 + 1e-12), -1.44, 1e-9);
  EXPECT_NEAR(RewardCpa(1.4 + 1e-12), -2.0, 0.0);
  EXPECT_EQ(RewardCpa(1e300), -2.0);
  EXPECT_THROW(RewardCpa(-0.1), std::invalid_argument);
  EXPECT_THROW(RewardCpa(std::nan("")), std::invalid_argument);
}

TEST(RewardConv, TableValues) {
  const RewardCase cases[] = {{1.2, 1.0}, {1.0, 1.0}, {0.9, 0.9}, {0.8, 0.0}, {0.5, -0.3}};
  for (const auto& c : cases) EXPECT_NEAR(RewardConv(c.x), c.want, 1e-12) << c.x;
}

TEST(RewardConv, EdgesAndErrors) {
  EXPECT_EQ(RewardConv(0.0), 0.0);
  EXPECT_NEAR(RewardConv(1e-9), 1e-9 - 0.8, 1e-15);
  EXPECT_EQ(RewardConv(kInfinity), 1.0);
  EXPECT_THROW(RewardConv(-1.0), std::invalid_argument);
}

TEST(CpaReal, Sentinels) {
  EXPECT_EQ(CpaReal(AdTotals{}), 0.0);
  EXPECT_EQ(CpaReal(AdTotals{.clicks = 3, .conversions = 0, .cost = 1.5}), kInfinity);
  EXPECT_DOUBLE_EQ(CpaReal(AdTotals{.clicks = 9, .conversions = 4, .cost = 10.0}), 2.5);
}

TEST(ConversionsRatio, NeutralWhenBaseIsZero) {
  const auto r = ConversionsRatio(3.0, 0.0);
  EXPECT_TRUE(r.neutral);
  EXPECT_EQ(r.value, 1.0);
  const auto q = ConversionsRatio(3.0, 4.0);
  EXPECT_FALSE(q.neutral);
  EXPECT_EQ(q.value, 0.75);
}

TEST(Roi, Conventions) {
  EXPECT_EQ(Roi(0.0, 0.0), 1.0);
  EXPECT_EQ(Roi(5.0, 0.0), kInfinity);
  EXPECT_DOUBLE_EQ(Roi(6.0, 4.0), 1.5);
  EXPECT_DOUBLE_EQ(Revenue(3.0, 12.5), 37.5);
}

TEST(ConversionsBase, RunningSum) {
  const auto base = BuildConversionsBase({7, 9}, {{0.5, 0.0, 1.5}, {0.0, 0.0, 0.0}}, 3);
  EXPECT_EQ(base.num_sessions(), 3);
  EXPECT_DOUBLE_EQ(base.CumulativeThrough(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(base.CumulativeThrough(0, 2), 2.0);
  EXPECT_DOUBLE_EQ(base.CumulativeThrough(1, 2), 0.0);
  EXPECT_THROW(base.CumulativeThrough(2, 0), std::out_of_range);
  EXPECT_THROW(base.CumulativeThrough(0, 3), std::out_of_range);
}

TEST(ConversionsBase, RejectsShortOrDecreasingRows) {
  EXPECT_THROW(BuildConversionsBase({1}, {{1.0, 2.0}}, 3), std::invalid_argument);
  EXPECT_THROW(BuildConversionsBase({1, 2}, {{1.0}}, 1), std::invalid_argument);
  EXPECT_THROW(ConversionsBase({1}, {{2.0, 1.0}}), std::invalid_argument);
}

TEST(ConversionsBase, CsvRoundTrip) {
  const auto base = BuildConversionsBase({3, 11}, {{0.1, 0.2}, {1.0 / 3.0, 0.0}}, 2);
  std::stringstream s;
  WriteConversionsBaseCsv(s, base);
  EXPECT_EQ(s.str().substr(0, s.str().find('\n')), "ad_id,session,base_cumulative");
  const auto back = ReadConversionsBaseCsv(s);
  EXPECT_EQ(back, base);
}

TEST(ConversionsBase, CsvErrors) {
  std::stringstream bad_header("ad,session,x\n");
  EXPECT_THROW(ReadConversionsBaseCsv(bad_header), std::runtime_error);
  std::stringstream gap("ad_id,session,base_cumulative\n1,0,0.5\n1,2,1\n");
  EXPECT_THROW(ReadConversionsBaseCsv(gap), std::runtime_error);
}

}  // namespace
}  // namespace motiac::objectives
