// SPDX-License-Identifier: Apache-2.0
//
// Reward functions for the two bidding objectives (keep CPA under target,
// grow conversions) and the Revenue / Cost / ROI bookkeeping used to score
// every bidder.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace motiac::objectives {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Objective : int { kCpa = 0, kConversions = 1 };
inline constexpr int kNumObjectives = 2;

/// Cumulative per-ad counters within one episode.
struct AdTotals {
  std::int64_t clicks = 0;
  std::int64_t conversions = 0;
  double cost = 0.0;

  friend bool operator==(const AdTotals&, const AdTotals&) = default;
};

/// cost / conversions. +inf when money was spent without a conversion, 0
/// when nothing happened yet.
double CpaReal(const AdTotals& totals);

/// Piecewise CPA reward on x = CPA_real / CPA_target:
///   1 on [0, 1], 1 - x on (1, 1.2], -x^2 on (1.2, 1.4], -2 above (and at +inf).
/// x = 0 only arises with zero spend and is scored as on target.
double RewardCpa(double ratio);

/// Piecewise conversion reward on x = conversions / conversions_base:
///   1 above 1, x on (0.8, 1], x - 0.8 on (0, 0.8], 0 at x = 0.
double RewardConv(double ratio);

struct ConversionRatio {
  double value = 1.0;
  bool neutral = false;  // base was zero; value forced to 1
};
ConversionRatio ConversionsRatio(double conversions, double base);

double Revenue(double conversions, double cpa_target);

/// revenue / cost, +inf for revenue without cost, 1 when both are zero.
double Roi(double revenue, double cost);

/// Expected cumulative conversions per ad and session index under a
/// reference policy. Row i belongs to ad_ids()[i]; column s is the running
/// total through session s (inclusive).
class ConversionsBase {
 public:
  ConversionsBase(std::vector<std::int32_t> ad_ids, std::vector<std::vector<double>> cumulative);

  std::span<const std::int32_t> ad_ids() const { return ad_ids_; }
  std::size_t num_ads() const { return ad_ids_.size(); }
  int num_sessions() const { return sessions_; }
  double CumulativeThrough(std::size_t ad_index, int session) const;

  friend bool operator==(const ConversionsBase&, const ConversionsBase&) = default;

 private:
  std::vector<std::int32_t> ad_ids_;
  std::vector<std::vector<double>> cumulative_;
  int sessions_ = 0;
};

/// Running sum of per-session reference conversions. Every ad must cover
/// `sessions` sessions; anything else is an error.
ConversionsBase BuildConversionsBase(std::vector<std::int32_t> ad_ids,
                                     const std::vector<std::vector<double>>& per_session,
                                     int sessions);

// CSV: ad_id,session,base_cumulative
void WriteConversionsBaseCsv(std::ostream& out, const ConversionsBase& base);
ConversionsBase ReadConversionsBaseCsv(std::istream& in);

}  // namespace motiac::objectives
