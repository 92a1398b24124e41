#pragma once

#include <stdexcept>

#include "emgfinger/estimators/dataset.hpp"

namespace emgfinger::estimators {

struct RankDeficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LinearModel {
  double w_flexor = 0.0;
  double w_extensor = 0.0;
  double intercept = 0.0;
  bool fitted = false;

  double predict(const FeatureVector& x) const;
};

// Ordinary least squares on [flexor, extensor, 1].
LinearModel fit_linear(const Dataset& train);

}  // namespace emgfinger::estimators
