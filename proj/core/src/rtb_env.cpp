// SPDX-License-Identifier: Apache-2.0
#include "motiac/rtb_env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "motiac/io_util.hpp"

namespace motiac::rtb {

namespace {

constexpr double kRatioCap = 5.0;

void CheckRange(const Range& r, const char* name, double min_allowed, double max_allowed) {
  if (!(r.lo <= r.hi) || r.lo < min_allowed || r.hi > max_allowed || std::isnan(r.lo)) {
    throw std::invalid_argument(std::string("catalog range '") + name + "' is empty or invalid");
  }
}

double Uniform(std::mt19937_64& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

}  // namespace

void Validate(const AdCampaign& ad) {
  const auto id = std::to_string(ad.id);
  if (!(ad.cpa_target > 0.0) || !std::isfinite(ad.cpa_target)) {
    throw std::invalid_argument("ad " + id + ": cpa_target must be > 0");
  }
  if (!(ad.true_ctr > 0.0 && ad.true_ctr <= 1.0)) {
    throw std::invalid_argument("ad " + id + ": true_ctr must be in (0, 1]");
  }
  if (!(ad.true_cvr > 0.0 && ad.true_cvr <= 1.0)) {
    throw std::invalid_argument("ad " + id + ": true_cvr must be in (0, 1]");
  }
  if (ad.impressions_lo < 0 || ad.impressions_hi < ad.impressions_lo) {
    throw std::invalid_argument("ad " + id + ": bad impressions range");
  }
  if (!(ad.daily_budget > 0.0)) throw std::invalid_argument("ad " + id + ": daily_budget must be > 0");
}

std::vector<AdCampaign> GenerateCatalog(int n_ads, const CatalogConfig& config, std::uint64_t seed) {
  if (n_ads < 1) throw std::invalid_argument("GenerateCatalog: n_ads must be >= 1");
  CheckRange(config.ctr, "ctr", 1e-12, 1.0);
  CheckRange(config.cvr, "cvr", 1e-12, 1.0);
  CheckRange(config.cpa_target, "cpa_target", 1e-12, objectives::kInfinity);
  if (config.impressions.lo < 0 || config.impressions.hi < config.impressions.lo) {
    throw std::invalid_argument("catalog range 'impressions' is empty or invalid");
  }
  if (config.budgeted) CheckRange(config.budget_multiplier, "budget_multiplier", 1e-12, objectives::kInfinity);

  std::mt19937_64 rng(seed);
  std::vector<AdCampaign> catalog;
  catalog.reserve(static_cast<std::size_t>(n_ads));
  for (int i = 0; i < n_ads; ++i) {
    AdCampaign ad;
    ad.id = i;
    ad.cpa_target = Uniform(rng, config.cpa_target);
    ad.true_ctr = Uniform(rng, config.ctr);
    ad.true_cvr = Uniform(rng, config.cvr);
    ad.impressions_lo = config.impressions.lo;
    ad.impressions_hi = config.impressions.hi;
    if (config.budgeted) {
      const double mean_impressions = 0.5 * (ad.impressions_lo + ad.impressions_hi);
      const double full_win_conversions =
          mean_impressions * kSessionsPerDay * ad.true_ctr * ad.true_cvr;
      ad.daily_budget = Uniform(rng, config.budget_multiplier) * ad.cpa_target * full_win_conversions;
    }
    catalog.push_back(ad);
  }
  return catalog;
}

void WriteCatalogCsv(std::ostream& out, std::span<const AdCampaign> catalog) {
  out << "id,cpa_target,true_ctr,true_cvr,impressions_lo,impressions_hi,daily_budget\n";
  for (const auto& ad : catalog) {
    out << ad.id << ',' << io::FormatDouble(ad.cpa_target) << ',' << io::FormatDouble(ad.true_ctr)
        << ',' << io::FormatDouble(ad.true_cvr) << ',' << ad.impressions_lo << ','
        << ad.impressions_hi << ',' << io::FormatDouble(ad.daily_budget) << '\n';
  }
}

std::vector<AdCampaign> ReadCatalogCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      io::Trim(line) != "id,cpa_target,true_ctr,true_cvr,impressions_lo,impressions_hi,daily_budget") {
    throw std::runtime_error("catalog CSV: bad header");
  }
  std::vector<AdCampaign> catalog;
  while (std::getline(in, line)) {
    if (io::Trim(line).empty()) continue;
    auto f = io::Split(io::Trim(line), ',');
    if (f.size() != 7) throw std::runtime_error("catalog CSV: expected 7 fields in '" + line + "'");
    AdCampaign ad;
    ad.id = static_cast<AdId>(io::ParseInt(f[0]));
    ad.cpa_target = io::ParseDouble(f[1]);
    ad.true_ctr = io::ParseDouble(f[2]);
    ad.true_cvr = io::ParseDouble(f[3]);
    ad.impressions_lo = static_cast<int>(io::ParseInt(f[4]));
    ad.impressions_hi = static_cast<int>(io::ParseInt(f[5]));
    ad.daily_budget = io::ParseDouble(f[6]);
    Validate(ad);
    catalog.push_back(ad);
  }
  if (catalog.empty()) throw std::runtime_error("catalog CSV: no ads");
  return catalog;
}

double Ecpm(double cpcbid, double pctr) {
  if (cpcbid < 0.0 || std::isnan(cpcbid)) throw std::invalid_argument("Ecpm: negative bid");
  return cpcbid * pctr;
}

Allocation RunAuction(std::span<const Bid> bids, int impressions, double reserve) {
  if (reserve < 0.0) throw std::invalid_argument("RunAuction: reserve must be >= 0");
  Allocation alloc;
  alloc.impressions = 0;
  // Called once per ad and session; the scratch list avoids an allocation.
  thread_local std::vector<const Bid*> eligible;
  eligible.clear();
  for (const auto& b : bids) {
    if (b.cpcbid < 0.0 || std::isnan(b.cpcbid)) throw std::invalid_argument("RunAuction: negative bid");
    if (b.cpcbid > 0.0 && b.cpcbid >= reserve) eligible.push_back(&b);
  }
  if (eligible.empty()) return alloc;
  const auto before = [](const Bid* a, const Bid* b) {
    const double ea = Ecpm(a->cpcbid, a->pctr);
    const double eb = Ecpm(b->cpcbid, b->pctr);
    if (ea != eb) return ea > eb;
    return a->ad < b->ad;
  };
  // Stable insertion sort: auctions are a handful of bidders and
  // std::stable_sort would allocate a merge buffer every call.
  for (std::size_t i = 1; i < eligible.size(); ++i) {
    for (std::size_t j = i; j > 0 && before(eligible[j], eligible[j - 1]); --j) {
      std::swap(eligible[j], eligible[j - 1]);
    }
  }
  alloc.ranking.reserve(eligible.size());
  for (const auto* b : eligible) alloc.ranking.push_back(b->ad);
  const Bid& top = *eligible.front();
  double runner_up = 0.0;
  for (std::size_t i = 1; i < eligible.size(); ++i) runner_up = std::max(runner_up, eligible[i]->cpcbid);
  alloc.winner = top.ad;
  alloc.impressions = impressions;
  alloc.price_per_click = std::min(top.cpcbid, std::max(runner_up, reserve));
  return alloc;
}

Allocation RunAuction(const std::map<AdId, double>& bids, const std::map<AdId, double>& pctrs,
                      int impressions, double reserve) {
  std::vector<Bid> list;
  list.reserve(bids.size());
  for (const auto& [ad, cpcbid] : bids) {
    auto it = pctrs.find(ad);
    if (it == pctrs.end()) throw std::invalid_argument("RunAuction: no pCTR for ad " + std::to_string(ad));
    list.push_back(Bid{ad, cpcbid, it->second});
  }
  return RunAuction(list, impressions, reserve);
}

void SessionClock::Advance() {
  if (++session_index == kSessionsPerDay) {
    session_index = 0;
    ++day_index;
  }
}

Environment::Environment(std::vector<AdCampaign> catalog, const EnvConfig& config, std::uint64_t seed,
                         std::shared_ptr<const objectives::ConversionsBase> base)
    : catalog_(std::move(catalog)), config_(config), base_(std::move(base)) {
  if (catalog_.empty()) throw std::invalid_argument("Environment: empty catalog");
  if (config_.reserve < 0.0) throw std::invalid_argument("Environment: reserve must be >= 0");
  if (config_.noise_sigma < 0.0) throw std::invalid_argument("Environment: noise_sigma must be >= 0");
  if (config_.market.rivals < 0 || config_.market.log_sigma < 0.0) {
    throw std::invalid_argument("Environment: bad market config");
  }
  for (std::size_t i = 0; i < catalog_.size(); ++i) {
    Validate(catalog_[i]);
    if (!index_.emplace(catalog_[i].id, i).second) {
      throw std::invalid_argument("Environment: duplicate ad id " + std::to_string(catalog_[i].id));
    }
  }
  if (base_ && base_->num_ads() != catalog_.size()) {
    throw std::invalid_argument("Environment: conversions base does not match the catalog");
  }
  Reset(0, seed);
}

void Environment::Reset(int day_index, std::uint64_t seed) {
  seed_ = seed;
  clock_ = SessionClock{0, day_index};
  sessions_elapsed_ = 0;
  totals_.assign(catalog_.size(), objectives::AdTotals{});
  last_win_rate_.assign(catalog_.size(), 0.0);
  DrawSessionContext();
}

void Environment::DrawSessionContext() {
  io::SplitMix64 rng(io::DeriveSeed(seed_, static_cast<std::uint64_t>(clock_.day_index),
                                    static_cast<std::uint64_t>(clock_.session_index), 0));
  std::normal_distribution<double> noise(0.0, 1.0);
  context_.resize(catalog_.size());
  for (std::size_t i = 0; i < catalog_.size(); ++i) {
    const auto& ad = catalog_[i];
    auto& ctx = context_[i];
    ctx.impressions = std::uniform_int_distribution<int>(ad.impressions_lo, ad.impressions_hi)(rng);
    ctx.pctr = std::min(1.0, ad.true_ctr * std::exp(config_.noise_sigma * noise(rng)));
    ctx.pcvr = std::min(1.0, ad.true_cvr * std::exp(config_.noise_sigma * noise(rng)));
    ctx.rival_bids.resize(static_cast<std::size_t>(config_.market.rivals));
    for (auto& rb : ctx.rival_bids) {
      rb = ad.value_per_click() *
           std::exp(config_.market.log_mean + config_.market.log_sigma * noise(rng));
    }
  }
}

bool Environment::over_budget(std::size_t index) const {
  return totals_.at(index).cost >= catalog_.at(index).daily_budget;
}

RoundOutcome Environment::Step(std::span<const double> bids) {
  if (bids.size() != catalog_.size()) {
    throw std::invalid_argument("Environment::Step: expected one bid per catalog ad");
  }
  RoundOutcome outcome(catalog_.size());
  std::vector<Bid> auction;
  for (std::size_t i = 0; i < catalog_.size(); ++i) {
    const auto& ad = catalog_[i];
    const auto& ctx = context_[i];
    double bid = bids[i];
    if (bid < 0.0 || std::isnan(bid)) {
      throw std::invalid_argument("Environment::Step: invalid bid for ad " + std::to_string(ad.id));
    }
    if (over_budget(i)) bid = 0.0;

    auction.clear();
    if (bid > 0.0) auction.push_back(Bid{ad.id, bid, ctx.pctr});
    for (std::size_t r = 0; r < ctx.rival_bids.size(); ++r) {
      auction.push_back(Bid{-static_cast<AdId>(r) - 1, ctx.rival_bids[r], ctx.pctr});
    }
    const auto alloc = RunAuction(auction, ctx.impressions, config_.reserve);

    auto& out = outcome[i];
    if (alloc.winner && *alloc.winner == ad.id) {
      io::SplitMix64 rng(io::DeriveSeed(seed_, static_cast<std::uint64_t>(clock_.day_index),
                                        static_cast<std::uint64_t>(clock_.session_index), i + 1));
      out.won_impressions = alloc.impressions;
      out.clicks = std::binomial_distribution<std::int64_t>(out.won_impressions, ad.true_ctr)(rng);
      out.conversions = std::binomial_distribution<std::int64_t>(out.clicks, ad.true_cvr)(rng);
      out.price_per_click = alloc.price_per_click;
      out.cost = static_cast<double>(out.clicks) * out.price_per_click;
    }
    auto& t = totals_[i];
    t.clicks += out.clicks;
    t.conversions += out.conversions;
    t.cost += out.cost;
    last_win_rate_[i] = ctx.impressions > 0
                            ? static_cast<double>(out.won_impressions) / ctx.impressions
                            : 0.0;
  }
  clock_.Advance();
  ++sessions_elapsed_;
  DrawSessionContext();
  return outcome;
}

RoundOutcome Environment::Step(const std::map<AdId, double>& bids) {
  std::vector<double> dense(catalog_.size(), 0.0);
  for (const auto& [ad, bid] : bids) dense[IndexOf(ad)] = bid;
  return Step(dense);
}

std::size_t Environment::IndexOf(AdId ad) const {
  auto it = index_.find(ad);
  if (it == index_.end()) throw std::out_of_range("unknown ad id " + std::to_string(ad));
  return it->second;
}

double Environment::CpaRatio(std::size_t index) const {
  return objectives::CpaReal(totals_.at(index)) / catalog_.at(index).cpa_target;
}

objectives::ConversionRatio Environment::ConversionRatio(std::size_t index) const {
  if (!base_) return {1.0, true};
  const int last = sessions_elapsed_ - 1;
  if (last < 0) return {1.0, true};
  const int session = std::min(last, base_->num_sessions() - 1);
  return objectives::ConversionsRatio(static_cast<double>(totals_.at(index).conversions),
                                      base_->CumulativeThrough(index, session));
}

StateVec Environment::Observe(AdId ad) const { return ObserveIndex(IndexOf(ad)); }

StateVec Environment::ObserveIndex(std::size_t index) const {
  const auto& ad = catalog_.at(index);
  const auto& t = totals_[index];
  StateVec s{};
  s[0] = clock_.day_fraction();
  s[1] = t.conversions == 0 ? 0.0 : std::min(CpaRatio(index), kRatioCap);
  s[2] = base_ ? std::min(ConversionRatio(index).value, kRatioCap) : 0.0;
  s[3] = std::isfinite(ad.daily_budget) ? std::min(t.cost / ad.daily_budget, 1.0) : 0.0;
  s[4] = context_[index].pctr;
  s[5] = context_[index].pcvr;
  s[6] = last_win_rate_[index];
  s[7] = 1.0;
  return s;
}

}  // namespace motiac::rtb
