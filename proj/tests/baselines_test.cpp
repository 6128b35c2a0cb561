// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "motiac/baselines.hpp"
#include "test_util.hpp"

namespace motiac::baselines {
namespace {

using objectives::AdTotals;

TEST(PidBid, HoldsBeforeFirstConversion) {
  const auto step = PidBid(10.0, AdTotals{.clicks = 4, .conversions = 0, .cost = 3.0}, 1.5, PidState{},
                           BidBounds{});
  EXPECT_EQ(step.error, 0.0);
  EXPECT_EQ(step.bid, 1.5);
  EXPECT_TRUE(step.state.has_prev);
}

TEST(PidBid, TwoStepsByHand) {
  const auto first = PidBid(10.0, AdTotals{.clicks = 10, .conversions = 2, .cost = 40.0}, 1.0, PidState{},
                            BidBounds{});
  EXPECT_NEAR(first.error, -0.6931471805599453, 1e-15);
  EXPECT_NEAR(first.control, -0.3119162312519754, 1e-15);
  EXPECT_NEAR(first.bid, 0.7320428479728127, 1e-15);
  EXPECT_FALSE(first.saturated);
  EXPECT_EQ(first.state.integral, first.error);

  const auto second = PidBid(10.0, AdTotals{.clicks = 12, .conversions = 2, .cost = 25.0}, 0.7, first.state,
                             BidBounds{});
  EXPECT_NEAR(second.control, -0.08807159419481807, 1e-15);
  EXPECT_NEAR(second.bid, 0.640986721135338, 1e-15);
}

TEST(PidBid, SaturationFreezesIntegral) {
  PidState pid;
  pid.integral = 0.25;
  // CPA 1 against a target of 10: e = ln 10, raw u well above 0.5.
  const auto step = PidBid(10.0, AdTotals{.clicks = 2, .conversions = 2, .cost = 2.0}, 1.0, pid, BidBounds{});
  EXPECT_TRUE(step.saturated);
  EXPECT_EQ(step.control, 0.5);
  EXPECT_NEAR(step.bid, std::exp(0.5), 1e-15);
  EXPECT_EQ(step.state.integral, 0.25);

  const auto capped = PidBid(10.0, AdTotals{.clicks = 2, .conversions = 2, .cost = 2.0}, 99.0, PidState{},
                             BidBounds{0.01, 100.0});
  EXPECT_EQ(capped.bid, 100.0);
  EXPECT_TRUE(capped.saturated);
  EXPECT_EQ(capped.state.integral, 0.0);
}

TEST(PidBid, RejectsBadInputs) {
  EXPECT_THROW(PidBid(10.0, AdTotals{}, 0.0, PidState{}, BidBounds{}), std::invalid_argument);
  EXPECT_THROW(PidBid(10.0, AdTotals{}, 1.0, PidState{}, BidBounds{2.0, 1.0}), std::invalid_argument);
  PidState bad;
  bad.u_lo = 1.0;
  EXPECT_THROW(PidBid(10.0, AdTotals{}, 1.0, bad, BidBounds{}), std::invalid_argument);
}

TEST(PidBid, AdOverloadScalesBoundsByTarget) {
  rtb::AdCampaign ad;
  ad.cpa_target = 4.0;
  const auto step = PidBid(ad, AdTotals{.clicks = 1, .conversions = 1, .cost = 0.01}, 399.0, PidState{});
  EXPECT_EQ(step.bid, 400.0);
}

TEST(FixedBid, PredictedClickValue) {
  rtb::AdCampaign ad;
  ad.cpa_target = 12.0;
  EXPECT_DOUBLE_EQ(FixedBid(ad, 0.05), 0.6);
  EXPECT_DOUBLE_EQ(FixedBid(ad, 0.05, 2.0), 1.2);
  EXPECT_THROW(FixedBid(ad, 0.05, 0.0), std::invalid_argument);
}

TEST(Combination, Validation) {
  EXPECT_NO_THROW(ValidateCombination(std::vector<double>{0.3, 0.7}));
  EXPECT_THROW(ValidateCombination(std::vector<double>{0.3, 0.6}), std::invalid_argument);
  EXPECT_THROW(ValidateCombination(std::vector<double>{1.2, -0.2}), std::invalid_argument);
  EXPECT_THROW(ValidateCombination(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(SingleCriticModels, GroupSetup) {
  auto cfg = testing::SmallTrainConfig();
  cfg.iterations = 1;
  cfg.workers_per_group = 1;
  const auto factory = testing::SmallFactory();
  const auto o1 = O1Train(cfg, factory);
  EXPECT_EQ(o1.model, "o1");
  EXPECT_EQ(o1.num_groups, 1);
  EXPECT_EQ(o1.critics.size(), 1u);
  EXPECT_EQ(O2Train(cfg, factory).model, "o2");
  const auto agg = AggA3cTrain(cfg, std::vector<double>{0.5, 0.5}, factory);
  EXPECT_EQ(agg.model, "agg_a3c");
  EXPECT_EQ(agg.rows.size(), 1u);
  EXPECT_THROW(AggA3cTrain(cfg, std::vector<double>{0.5, 0.6}, factory), std::invalid_argument);
}

TEST(PidEpisode, SameSeedSameTrace) {
  const auto factory = testing::SmallFactory();
  auto a = factory();
  auto b = factory();
  a.Reset(0, 5);
  b.Reset(0, 5);
  const auto ta = PidEpisode(a, PidConfig{});
  const auto tb = PidEpisode(b, PidConfig{});
  EXPECT_EQ(ta.conversions, tb.conversions);
  EXPECT_EQ(ta.metrics.revenue, tb.metrics.revenue);
  ASSERT_EQ(ta.conversions.size(), 6u);
  EXPECT_EQ(ta.conversions[0].size(), static_cast<std::size_t>(rtb::kSessionsPerDay));
}

TEST(Evaluate, ReportShape) {
  const auto report = EvaluatePid(testing::SmallFactory(), 3, 4);
  EXPECT_EQ(report.model, "pid");
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_EQ(report.rows[3].iteration, 3);
  EXPECT_EQ(report.rows[0].weights, std::vector<double>{1.0});
  EXPECT_EQ(EvaluateFixed(testing::SmallFactory(), 3, 2).model, "fixed");
}

TEST(ConversionsBase, MatchesCommittedFixture) {
  const auto base = PidConversionsBase(testing::SmallCatalog(), testing::SmallEnvConfig(),
                                       std::vector<std::uint64_t>{1, 2, 3});
  EXPECT_EQ(base, *testing::SmallBase());
}

}  // namespace
}  // namespace motiac::baselines
