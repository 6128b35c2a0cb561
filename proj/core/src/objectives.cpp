// SPDX-License-Identifier: Apache-2.0
#include "motiac/objectives.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

#include "motiac/io_util.hpp"

namespace motiac::objectives {

double CpaReal(const AdTotals& totals) {
  if (totals.conversions == 0) return totals.cost > 0.0 ? kInfinity : 0.0;
  return totals.cost / static_cast<double>(totals.conversions);
}

double RewardCpa(double x) {
  if (std::isnan(x) || x < 0.0) {
    throw std::invalid_argument("RewardCpa: ratio must be >= 0, got " + io::FormatDouble(x));
  }
  if (x <= 1.0) return 1.0;
  if (x <= 1.2) return 1.0 - x;
  if (x <= 1.4) return -x * x;
  return -2.0;
}

double RewardConv(double x) {
  if (std::isnan(x) || x < 0.0) {
    throw std::invalid_argument("RewardConv: ratio must be >= 0, got " + io::FormatDouble(x));
  }
  if (x > 1.0) return 1.0;
  if (x > 0.8) return x;
  if (x > 0.0) return x - 0.8;
  return 0.0;
}

ConversionRatio ConversionsRatio(double conversions, double base) {
  if (base <= 0.0) return {1.0, true};
  return {conversions / base, false};
}

double Revenue(double conversions, double cpa_target) { return conversions * cpa_target; }

double Roi(double revenue, double cost) {
  if (cost > 0.0) return revenue / cost;
  return revenue > 0.0 ? kInfinity : 1.0;
}

ConversionsBase::ConversionsBase(std::vector<std::int32_t> ad_ids,
                                 std::vector<std::vector<double>> cumulative)
    : ad_ids_(std::move(ad_ids)), cumulative_(std::move(cumulative)) {
  if (ad_ids_.size() != cumulative_.size()) {
    throw std::invalid_argument("ConversionsBase: one row per ad required");
  }
  sessions_ = cumulative_.empty() ? 0 : static_cast<int>(cumulative_.front().size());
  for (const auto& row : cumulative_) {
    if (static_cast<int>(row.size()) != sessions_) {
      throw std::invalid_argument("ConversionsBase: ragged rows");
    }
    double prev = 0.0;
    for (double v : row) {
      if (!(v >= prev) || !std::isfinite(v)) {
        throw std::invalid_argument("ConversionsBase: rows must be finite, >= 0 and non-decreasing");
      }
      prev = v;
    }
  }
}

double ConversionsBase::CumulativeThrough(std::size_t ad_index, int session) const {
  if (ad_index >= cumulative_.size() || session < 0 || session >= sessions_) {
    throw std::out_of_range("ConversionsBase: index out of range");
  }
  return cumulative_[ad_index][static_cast<std::size_t>(session)];
}

ConversionsBase BuildConversionsBase(std::vector<std::int32_t> ad_ids,
                                     const std::vector<std::vector<double>>& per_session,
                                     int sessions) {
  if (per_session.size() != ad_ids.size()) {
    throw std::invalid_argument("BuildConversionsBase: one reference row per ad required");
  }
  std::vector<std::vector<double>> cumulative;
  cumulative.reserve(per_session.size());
  for (std::size_t i = 0; i < per_session.size(); ++i) {
    const auto& row = per_session[i];
    if (static_cast<int>(row.size()) != sessions) {
      throw std::invalid_argument("BuildConversionsBase: ad " + std::to_string(ad_ids[i]) +
                                  " covers " + std::to_string(row.size()) + " of " +
                                  std::to_string(sessions) + " sessions");
    }
    std::vector<double> running(row.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < row.size(); ++s) {
      acc += row[s];
      running[s] = acc;
    }
    cumulative.push_back(std::move(running));
  }
  return ConversionsBase(std::move(ad_ids), std::move(cumulative));
}

void WriteConversionsBaseCsv(std::ostream& out, const ConversionsBase& base) {
  out << "ad_id,session,base_cumulative\n";
  for (std::size_t i = 0; i < base.num_ads(); ++i) {
    for (int s = 0; s < base.num_sessions(); ++s) {
      out << base.ad_ids()[i] << ',' << s << ',' << io::FormatDouble(base.CumulativeThrough(i, s))
          << '\n';
    }
  }
}

ConversionsBase ReadConversionsBaseCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || io::Trim(line) != "ad_id,session,base_cumulative") {
    throw std::runtime_error("conversions base CSV: bad header");
  }
  std::map<std::int32_t, std::map<int, double>> rows;
  std::vector<std::int32_t> order;
  while (std::getline(in, line)) {
    if (io::Trim(line).empty()) continue;
    auto f = io::Split(io::Trim(line), ',');
    if (f.size() != 3) throw std::runtime_error("conversions base CSV: expected 3 fields");
    const auto ad = static_cast<std::int32_t>(io::ParseInt(f[0]));
    if (!rows.contains(ad)) order.push_back(ad);
    rows[ad][static_cast<int>(io::ParseInt(f[1]))] = io::ParseDouble(f[2]);
  }
  std::vector<std::vector<double>> cumulative;
  for (auto ad : order) {
    const auto& m = rows[ad];
    std::vector<double> row;
    int expect = 0;
    for (const auto& [s, v] : m) {
      if (s != expect++) throw std::runtime_error("conversions base CSV: missing session");
      row.push_back(v);
    }
    cumulative.push_back(std::move(row));
  }
  return ConversionsBase(std::move(order), std::move(cumulative));
}

}  // namespace motiac::objectives
