// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "motiac/rtb_env.hpp"

namespace motiac::rtb {
namespace {

AdCampaign MakeAd(AdId id, double ctr = 0.05, double cvr = 0.1, double cpa = 10.0) {
  AdCampaign ad;
  ad.id = id;
  ad.cpa_target = cpa;
  ad.true_ctr = ctr;
  ad.true_cvr = cvr;
  ad.impressions_lo = 80;
  ad.impressions_hi = 120;
  return ad;
}

TEST(Auction, WinnerPaysRunnerUpCappedByOwnBid) {
  const Bid bids[] = {{1, 2.0, 0.10}, {2, 3.0, 0.05}, {3, 1.0, 0.10}};
  const auto a = RunAuction(bids, 50, 0.01);
  ASSERT_TRUE(a.winner);
  EXPECT_EQ(*a.winner, 1);
  EXPECT_EQ(a.ranking, (std::vector<AdId>{1, 2, 3}));
  // Highest competing cpcbid is 3.0, above the winner's own 2.0.
  EXPECT_DOUBLE_EQ(a.price_per_click, 2.0);
  EXPECT_EQ(a.impressions, 50);
}

TEST(Auction, SecondPriceAndReserve) {
  const Bid two[] = {{4, 2.0, 0.1}, {5, 1.25, 0.1}};
  EXPECT_DOUBLE_EQ(RunAuction(two, 10, 0.01).price_per_click, 1.25);
  const Bid alone[] = {{4, 2.0, 0.1}};
  EXPECT_DOUBLE_EQ(RunAuction(alone, 10, 0.5).price_per_click, 0.5);
  const Bid low[] = {{4, 0.4, 0.1}};
  EXPECT_FALSE(RunAuction(low, 10, 0.5).winner);
  EXPECT_TRUE(RunAuction(low, 10, 0.5).ranking.empty());
}

TEST(Auction, TiesGoToSmallerId) {
  const Bid bids[] = {{9, 1.0, 0.2}, {3, 2.0, 0.1}};
  const auto a = RunAuction(bids, 1, 0.0);
  EXPECT_EQ(*a.winner, 3);
  EXPECT_DOUBLE_EQ(a.price_per_click, 1.0);
}

TEST(Auction, ZeroBidSitsOutAndNegativeThrows) {
  const Bid bids[] = {{1, 0.0, 0.5}, {2, 0.3, 0.01}};
  EXPECT_EQ(*RunAuction(bids, 1, 0.0).winner, 2);
  const Bid bad[] = {{1, -1.0, 0.5}};
  EXPECT_THROW(RunAuction(bad, 1, 0.0), std::invalid_argument);
  EXPECT_THROW(Ecpm(std::nan(""), 0.1), std::invalid_argument);
}

TEST(Auction, MapOverload) {
  const std::map<AdId, double> bids{{1, 1.0}, {2, 2.0}};
  const std::map<AdId, double> pctrs{{1, 0.1}, {2, 0.1}};
  EXPECT_EQ(*RunAuction(bids, pctrs, 5, 0.0).winner, 2);
  EXPECT_THROW(RunAuction(bids, std::map<AdId, double>{{1, 0.1}}, 5, 0.0), std::invalid_argument);
}

TEST(Catalog, SeededWithinRanges) {
  const CatalogConfig cfg;
  const auto a = GenerateCatalog(30, cfg, 7);
  EXPECT_EQ(a, GenerateCatalog(30, cfg, 7));
  EXPECT_NE(a, GenerateCatalog(30, cfg, 8));
  for (const auto& ad : a) {
    EXPECT_GE(ad.true_ctr, cfg.ctr.lo);
    EXPECT_LE(ad.true_ctr, cfg.ctr.hi);
    EXPECT_GE(ad.cpa_target, cfg.cpa_target.lo);
    EXPECT_LE(ad.cpa_target, cfg.cpa_target.hi);
    EXPECT_TRUE(std::isfinite(ad.daily_budget));
    EXPECT_NO_THROW(Validate(ad));
  }
  CatalogConfig open = cfg;
  open.budgeted = false;
  EXPECT_TRUE(std::isinf(GenerateCatalog(1, open, 1).front().daily_budget));
  EXPECT_THROW(GenerateCatalog(0, cfg, 1), std::invalid_argument);
}

TEST(Catalog, CsvRoundTrip) {
  const auto a = GenerateCatalog(12, CatalogConfig{}, 3);
  std::stringstream s;
  WriteCatalogCsv(s, a);
  EXPECT_EQ(ReadCatalogCsv(s), a);
}

TEST(Catalog, ValidateRejectsBadAds) {
  auto ad = MakeAd(1);
  ad.true_ctr = 0.0;
  EXPECT_THROW(Validate(ad), std::invalid_argument);
  ad = MakeAd(1);
  ad.impressions_hi = 10;
  EXPECT_THROW(Validate(ad), std::invalid_argument);
  ad = MakeAd(1);
  ad.daily_budget = 0.0;
  EXPECT_THROW(Validate(ad), std::invalid_argument);
}

TEST(Environment, SameSeedSameDay) {
  const auto catalog = GenerateCatalog(10, CatalogConfig{}, 1);
  Environment a(catalog, EnvConfig{}, 42);
  Environment b(catalog, EnvConfig{}, 42);
  std::vector<double> bids(catalog.size());
  while (!a.day_over()) {
    for (std::size_t i = 0; i < bids.size(); ++i) bids[i] = catalog[i].value_per_click() * (0.5 + 0.1 * i);
    EXPECT_EQ(a.Step(bids), b.Step(bids));
  }
  EXPECT_TRUE(b.day_over());
  EXPECT_EQ(a.sessions_elapsed(), kSessionsPerDay);
}

TEST(Environment, OutcomesDoNotDependOnOtherAdsBids) {
  const auto catalog = GenerateCatalog(5, CatalogConfig{}, 2);
  Environment a(catalog, EnvConfig{}, 9);
  Environment b(catalog, EnvConfig{}, 9);
  for (int s = 0; s < 20; ++s) {
    std::vector<double> x(catalog.size(), 0.0);
    std::vector<double> y(catalog.size(), 0.0);
    x[0] = y[0] = catalog[0].value_per_click() * 1.5;
    for (std::size_t i = 1; i < catalog.size(); ++i) y[i] = catalog[i].value_per_click() * (s % 3);
    EXPECT_EQ(a.Step(x)[0], b.Step(y)[0]);
  }
}

TEST(Environment, AccountingInvariants) {
  const auto catalog = GenerateCatalog(8, CatalogConfig{}, 3);
  const EnvConfig cfg;
  Environment env(catalog, cfg, 5);
  std::vector<objectives::AdTotals> sums(catalog.size());
  std::vector<double> bids(catalog.size());
  while (!env.day_over()) {
    for (std::size_t i = 0; i < bids.size(); ++i) bids[i] = 2.0 * catalog[i].value_per_click();
    std::vector<int> offered(catalog.size());
    for (std::size_t i = 0; i < bids.size(); ++i) offered[i] = env.offered_impressions(i);
    const auto out = env.Step(bids);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& o = out[i];
      EXPECT_LE(o.conversions, o.clicks);
      EXPECT_LE(o.clicks, o.won_impressions);
      EXPECT_LE(o.won_impressions, offered[i]);
      EXPECT_DOUBLE_EQ(o.cost, static_cast<double>(o.clicks) * o.price_per_click);
      if (o.won_impressions > 0) {
        EXPECT_LE(o.price_per_click, bids[i]);
        EXPECT_GE(o.price_per_click, cfg.reserve);
      }
      sums[i].clicks += o.clicks;
      sums[i].conversions += o.conversions;
      sums[i].cost += o.cost;
    }
  }
  for (std::size_t i = 0; i < catalog.size(); ++i) EXPECT_EQ(sums[i], env.totals(i));
}

TEST(Environment, BudgetStopsSpending) {
  auto ad = MakeAd(1, 0.5, 0.1, 10.0);
  ad.daily_budget = 5.0;
  EnvConfig cfg;
  cfg.market.rivals = 0;
  Environment env({ad}, cfg, 1);
  const std::vector<double> bid{1.0};
  while (!env.day_over()) env.Step(bid);
  EXPECT_TRUE(env.over_budget(0));
  // Spend can overshoot by at most one session's clicks at the bid.
  EXPECT_LE(env.totals(0).cost, 5.0 + 120.0);
  EXPECT_GE(env.totals(0).cost, 5.0);
  env.Reset(1, 2);
  EXPECT_FALSE(env.over_budget(0));
  EXPECT_EQ(env.totals(0), objectives::AdTotals{});
}

TEST(Environment, ObservationLayout) {
  const auto catalog = GenerateCatalog(3, CatalogConfig{}, 4);
  Environment env(catalog, EnvConfig{}, 1);
  auto s = env.ObserveIndex(1);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_EQ(s[4], env.predicted_ctr(1));
  EXPECT_EQ(s[5], env.predicted_cvr(1));
  EXPECT_EQ(s[7], 1.0);
  env.Step(std::vector<double>(3, 100.0));
  s = env.Observe(catalog[1].id);
  EXPECT_DOUBLE_EQ(s[0], 1.0 / kSessionsPerDay);
  EXPECT_GE(s[6], 0.0);
  EXPECT_LE(s[6], 1.0);
  EXPECT_LE(s[1], 5.0);
}

TEST(Environment, RejectsBadInput) {
  const auto catalog = GenerateCatalog(2, CatalogConfig{}, 4);
  Environment env(catalog, EnvConfig{}, 1);
  EXPECT_THROW(env.Step(std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(env.Step(std::vector<double>{1.0, -1.0}), std::invalid_argument);
  EXPECT_THROW(env.Step(std::map<AdId, double>{{77, 1.0}}), std::out_of_range);
  EXPECT_THROW(env.IndexOf(77), std::out_of_range);
  auto dup = catalog;
  dup[1].id = dup[0].id;
  EXPECT_THROW(Environment(dup, EnvConfig{}, 1), std::invalid_argument);
}

TEST(Environment, MapBidsMatchDenseBids) {
  const auto catalog = GenerateCatalog(3, CatalogConfig{}, 6);
  Environment a(catalog, EnvConfig{}, 3);
  Environment b(catalog, EnvConfig{}, 3);
  const double v = 2.0 * catalog[2].value_per_click();
  EXPECT_EQ(a.Step(std::map<AdId, double>{{catalog[2].id, v}}), b.Step(std::vector<double>{0.0, 0.0, v}));
}

TEST(Environment, LoneBidderClickRate) {
  auto ad = MakeAd(1, 0.3, 0.1, 10.0);
  ad.impressions_lo = ad.impressions_hi = 200;
  EnvConfig cfg;
  cfg.market.rivals = 0;
  Environment env({ad}, cfg, 17);
  std::int64_t won = 0;
  std::int64_t clicks = 0;
  const std::vector<double> bid{1.0};
  while (!env.day_over()) {
    const auto o = env.Step(bid);
    won += o[0].won_impressions;
    clicks += o[0].clicks;
  }
  EXPECT_EQ(won, 200 * kSessionsPerDay);
  const double rate = static_cast<double>(clicks) / static_cast<double>(won);
  EXPECT_LE(std::abs(rate - 0.3), 3.0 * std::sqrt(0.3 * 0.7 / static_cast<double>(won)));
}

TEST(SessionClock, RollsOverDays) {
  SessionClock c{kSessionsPerDay - 1, 4};
  c.Advance();
  EXPECT_EQ(c.session_index, 0);
  EXPECT_EQ(c.day_index, 5);
}

}  // namespace
}  // namespace motiac::rtb
