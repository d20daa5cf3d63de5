#include "almlab/convergence.hpp"

#include <cmath>
#include <stdexcept>

namespace almlab {

double convergence_report(const std::vector<ConvergenceRow>& rows) {
  if (rows.size() < 3) throw std::invalid_argument("convergence_report needs at least 3 rows");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!(rows[i].h > 0.0) || !(rows[i].error > 0.0))
      throw std::invalid_argument("convergence_report needs positive h and error");
    if (i > 0 && !(rows[i].h < rows[i - 1].h))
      throw std::invalid_argument("convergence_report needs strictly decreasing h");
    const double x = std::log(rows[i].h), y = std::log(rows[i].error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(rows.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double pairwise_rate(const ConvergenceRow& coarse, const ConvergenceRow& fine) {
  return std::log(coarse.error / fine.error) / std::log(coarse.h / fine.h);
}

}  // namespace almlab
