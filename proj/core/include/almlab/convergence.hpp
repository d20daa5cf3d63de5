#pragma once

#include <vector>

namespace almlab {

struct ConvergenceRow {
  double h = 0.0;
  double error = 0.0;
};

// Least-squares slope of log(error) against log(h). Needs at least three rows
// with strictly decreasing h and positive errors.
double convergence_report(const std::vector<ConvergenceRow>& rows);

// Rate between consecutive rows, log(e_{i-1}/e_i) / log(h_{i-1}/h_i).
double pairwise_rate(const ConvergenceRow& coarse, const ConvergenceRow& fine);

}  // namespace almlab
