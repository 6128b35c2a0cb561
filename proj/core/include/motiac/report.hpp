// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "motiac/trainer.hpp"

namespace motiac::report {

// model,iteration,group,worker,revenue,cost,roi,w1..wK,actor_loss,critic_loss,entropy
std::string CsvHeader(int num_weights);
void WriteReportCsv(std::ostream& out, const train::TrainReport& report);
std::string ReportCsv(const train::TrainReport& report);

/// Inverse of WriteReportCsv for the row data (model, K and rows).
train::TrainReport ReadReportCsv(std::istream& in);

/// Per-iteration means over every worker row of that iteration.
struct CurvePoint {
  int iteration = 0;
  double revenue = 0.0;
  double cost = 0.0;
  double roi = 1.0;  // sum revenue / sum cost within the iteration
  std::vector<double> weights;  // mean w_k
};

std::vector<CurvePoint> Curve(const train::TrainReport& report);

}  // namespace motiac::report
