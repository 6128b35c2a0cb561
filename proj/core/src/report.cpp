// SPDX-License-Identifier: Apache-2.0
#include "motiac/report.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "motiac/io_util.hpp"
#include "motiac/objectives.hpp"

namespace motiac::report {

std::string CsvHeader(int num_weights) {
  std::string h = "model,iteration,group,worker,revenue,cost,roi";
  for (int k = 1; k <= num_weights; ++k) h += ",w" + std::to_string(k);
  h += ",actor_loss,critic_loss,entropy";
  return h;
}

void WriteReportCsv(std::ostream& out, const train::TrainReport& report) {
  out << CsvHeader(report.num_groups) << '\n';
  for (const auto& r : report.rows) {
    if (r.weights.size() != static_cast<std::size_t>(report.num_groups)) {
      throw std::invalid_argument("WriteReportCsv: row weight count does not match K");
    }
    out << report.model << ',' << r.iteration << ',' << r.group << ',' << r.worker << ','
        << io::FormatDouble(r.revenue) << ',' << io::FormatDouble(r.cost) << ','
        << io::FormatDouble(r.roi);
    for (double w : r.weights) out << ',' << io::FormatDouble(w);
    out << ',' << io::FormatDouble(r.actor_loss) << ',' << io::FormatDouble(r.critic_loss) << ','
        << io::FormatDouble(r.entropy) << '\n';
  }
}

std::string ReportCsv(const train::TrainReport& report) {
  std::ostringstream out;
  WriteReportCsv(out, report);
  return out.str();
}

train::TrainReport ReadReportCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("report CSV: missing header");
  const auto header = io::Split(line, ',');
  if (header.size() < 10) throw std::runtime_error("report CSV: header too short");
  const int k = static_cast<int>(header.size()) - 10;
  if (line != CsvHeader(k)) throw std::runtime_error("report CSV: unexpected header '" + line + "'");

  train::TrainReport report;
  report.num_groups = k;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = io::Split(line, ',');
    if (f.size() != header.size()) {
      throw std::runtime_error("report CSV line " + std::to_string(line_no) + ": wrong field count");
    }
    try {
      if (report.model.empty()) {
        report.model = f[0];
      } else if (report.model != f[0]) {
        throw std::runtime_error("mixed model names");
      }
      train::ReportRow r;
      r.iteration = static_cast<int>(io::ParseInt(f[1]));
      r.group = static_cast<int>(io::ParseInt(f[2]));
      r.worker = static_cast<int>(io::ParseInt(f[3]));
      r.revenue = io::ParseDouble(f[4]);
      r.cost = io::ParseDouble(f[5]);
      r.roi = io::ParseDouble(f[6]);
      for (int j = 0; j < k; ++j) r.weights.push_back(io::ParseDouble(f[7 + static_cast<std::size_t>(j)]));
      r.actor_loss = io::ParseDouble(f[7 + static_cast<std::size_t>(k)]);
      r.critic_loss = io::ParseDouble(f[8 + static_cast<std::size_t>(k)]);
      r.entropy = io::ParseDouble(f[9 + static_cast<std::size_t>(k)]);
      report.rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error("report CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  report.episodes = static_cast<std::int64_t>(report.rows.size());
  return report;
}

std::vector<CurvePoint> Curve(const train::TrainReport& report) {
  struct Acc {
    double revenue = 0.0;
    double cost = 0.0;
    std::vector<double> weights;
    int n = 0;
  };
  std::map<int, Acc> by_iter;
  for (const auto& r : report.rows) {
    auto& a = by_iter[r.iteration];
    a.revenue += r.revenue;
    a.cost += r.cost;
    if (a.weights.empty()) a.weights.assign(r.weights.size(), 0.0);
    for (std::size_t j = 0; j < r.weights.size() && j < a.weights.size(); ++j) a.weights[j] += r.weights[j];
    ++a.n;
  }
  std::vector<CurvePoint> out;
  for (auto& [it, a] : by_iter) {
    CurvePoint p;
    p.iteration = it;
    p.roi = objectives::Roi(a.revenue, a.cost);
    p.revenue = a.revenue / a.n;
    p.cost = a.cost / a.n;
    for (auto& w : a.weights) w /= a.n;
    p.weights = std::move(a.weights);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace motiac::report
