#include "emgfinger/estimators/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace emgfinger::estimators {

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw std::invalid_argument("rmse: length mismatch");
  if (actual.empty()) throw std::invalid_argument("rmse: empty series");
  double ss = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw std::invalid_argument("r_squared: length mismatch");
  if (actual.size() < 2) throw std::invalid_argument("r_squared: need at least two samples");
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  }
  if (ss_tot == 0.0) throw std::invalid_argument("r_squared: actual series is constant");
  return 1.0 - ss_res / ss_tot;
}

}  // namespace emgfinger::estimators
