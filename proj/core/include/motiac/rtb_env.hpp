// SPDX-License-Identifier: Apache-2.0
//
// Synthetic oCPA auction market. Each session every ad in the catalog
// receives a batch of ad requests; the batch is sold in a single-slot
// second-price auction between the ad and outside market rivals, ranked by
// eCPM = cpcbid * pCTR. The winner pays per click.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "motiac/objectives.hpp"

namespace motiac::rtb {

using AdId = std::int32_t;

inline constexpr int kSessionsPerDay = 144;
inline constexpr std::size_t kStateDim = 8;

struct AdCampaign {
  AdId id = 0;
  double cpa_target = 1.0;
  double true_ctr = 0.01;
  double true_cvr = 0.01;
  int impressions_lo = 0;
  int impressions_hi = 0;
  double daily_budget = objectives::kInfinity;

  double value_per_click() const { return cpa_target * true_cvr; }
  friend bool operator==(const AdCampaign&, const AdCampaign&) = default;
};

/// Throws std::invalid_argument on a target <= 0, a probability outside
/// (0, 1], a bad impression range or a non-positive budget.
void Validate(const AdCampaign& ad);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct CatalogConfig {
  Range ctr{0.01, 0.05};
  Range cvr{0.05, 0.2};
  Range cpa_target{5.0, 20.0};
  IntRange impressions{50, 150};
  // daily_budget = multiplier * cpa_target * (expected conversions if the
  // ad won every request of the day). Unbounded when `budgeted` is false.
  bool budgeted = true;
  Range budget_multiplier{0.8, 1.6};
};

std::vector<AdCampaign> GenerateCatalog(int n_ads, const CatalogConfig& config, std::uint64_t seed);

// CSV: id,cpa_target,true_ctr,true_cvr,impressions_lo,impressions_hi,daily_budget
void WriteCatalogCsv(std::ostream& out, std::span<const AdCampaign> catalog);
std::vector<AdCampaign> ReadCatalogCsv(std::istream& in);

double Ecpm(double cpcbid, double pctr);

struct Bid {
  AdId ad = 0;
  double cpcbid = 0.0;
  double pctr = 0.0;
};

struct Allocation {
  std::vector<AdId> ranking;  // eligible bidders, eCPM descending
  std::optional<AdId> winner;
  int impressions = 0;
  double price_per_click = 0.0;
};

/// Single-slot auction. Bidders below the reserve are not eligible; ties in
/// eCPM go to the smaller id. The winner pays
/// min(own cpcbid, max(highest competing cpcbid, reserve)).
Allocation RunAuction(std::span<const Bid> bids, int impressions, double reserve);
Allocation RunAuction(const std::map<AdId, double>& bids, const std::map<AdId, double>& pctrs,
                      int impressions, double reserve);

struct SessionClock {
  int session_index = 0;
  int day_index = 0;

  double day_fraction() const {
    return static_cast<double>(session_index) / static_cast<double>(kSessionsPerDay);
  }
  void Advance();
};

struct AdOutcome {
  std::int64_t won_impressions = 0;
  std::int64_t clicks = 0;
  std::int64_t conversions = 0;
  double cost = 0.0;
  double price_per_click = 0.0;

  friend bool operator==(const AdOutcome&, const AdOutcome&) = default;
};

/// One entry per catalog position.
using RoundOutcome = std::vector<AdOutcome>;

/// [day fraction, CPA ratio (cap 5, 0 before the first conversion),
///  conversions / base (cap 5), budget spent fraction, pCTR, pCVR,
///  last-session win rate, 1.0]
using StateVec = std::array<double, kStateDim>;

struct MarketConfig {
  int rivals = 1;
  // Rival cpcbid = ad's true value per click * exp(N(log_mean, log_sigma)).
  double log_mean = 0.0;
  double log_sigma = 0.35;
};

struct EnvConfig {
  int n_ads = 50;
  std::uint64_t catalog_seed = 2020;
  CatalogConfig catalog;
  MarketConfig market;
  double noise_sigma = 0.1;
  double reserve = 0.01;
};

/// Single-owner mutable market state. Everything random in a session
/// (request volume, predictions, rival bids, click/conversion draws) comes
/// from streams keyed by (seed, day, session, ad), so outcomes for one ad do
/// not depend on what other ads bid.
class Environment {
 public:
  Environment(std::vector<AdCampaign> catalog, const EnvConfig& config, std::uint64_t seed,
              std::shared_ptr<const objectives::ConversionsBase> base = nullptr);

  /// Start a fresh day: clock to session 0 of `day_index`, totals cleared.
  void Reset(int day_index, std::uint64_t seed);

  /// Bids by catalog position; a bid of 0 means "sit out".
  RoundOutcome Step(std::span<const double> bids);
  /// Bids by ad id; ads absent from the map sit out. Unknown ids throw.
  RoundOutcome Step(const std::map<AdId, double>& bids);

  StateVec Observe(AdId ad) const;
  StateVec ObserveIndex(std::size_t index) const;

  /// CPA_real / CPA_target over the day so far (+inf sentinel when money was
  /// spent without a conversion).
  double CpaRatio(std::size_t index) const;
  /// Conversions over the base table through the last completed session.
  objectives::ConversionRatio ConversionRatio(std::size_t index) const;

  std::size_t IndexOf(AdId ad) const;
  const std::vector<AdCampaign>& catalog() const { return catalog_; }
  const EnvConfig& config() const { return config_; }
  const SessionClock& clock() const { return clock_; }
  int sessions_elapsed() const { return sessions_elapsed_; }
  bool day_over() const { return sessions_elapsed_ >= kSessionsPerDay; }
  const objectives::AdTotals& totals(std::size_t index) const { return totals_.at(index); }
  bool over_budget(std::size_t index) const;
  double predicted_ctr(std::size_t index) const { return context_.at(index).pctr; }
  double predicted_cvr(std::size_t index) const { return context_.at(index).pcvr; }
  int offered_impressions(std::size_t index) const { return context_.at(index).impressions; }
  const std::shared_ptr<const objectives::ConversionsBase>& conversions_base() const { return base_; }

 private:
  struct AdContext {
    int impressions = 0;
    double pctr = 0.0;
    double pcvr = 0.0;
    std::vector<double> rival_bids;
  };

  void DrawSessionContext();

  std::vector<AdCampaign> catalog_;
  EnvConfig config_;
  std::shared_ptr<const objectives::ConversionsBase> base_;
  std::uint64_t seed_ = 0;
  SessionClock clock_;
  int sessions_elapsed_ = 0;
  std::vector<objectives::AdTotals> totals_;
  std::vector<double> last_win_rate_;
  std::vector<AdContext> context_;
  std::map<AdId, std::size_t> index_;
};

}  // namespace motiac::rtb
