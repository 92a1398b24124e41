#pragma once

#include <span>

namespace emgfinger::estimators {

// sqrt(mean((a - p)^2)). Throws on length mismatch or empty input.
double rmse(std::span<const double> actual, std::span<const double> predicted);

// 1 - SS_res / SS_tot. Negative when the prediction is worse than the mean.
// Throws when `actual` is constant or shorter than two samples.
double r_squared(std::span<const double> actual, std::span<const double> predicted);

}  // namespace emgfinger::estimators
