#pragma once

#include <vector>

#include <json.hpp>

#include "emgfinger/controller/tension_model.hpp"
#include "emgfinger/harness/config.hpp"

namespace emgfinger::harness {

struct CalibrationResult {
  std::vector<controller::CalibrationSample> fit_samples;
  std::vector<controller::CalibrationSample> eval_samples;
  controller::TensionModel model;
  // Force predicted from measured tension through the 1-D curve, against the
  // force sensor, over the evaluation sweeps.
  double force_rmse = 0.0;
  double force_r2 = 0.0;
  std::vector<double> placement_rmse;
};

// Slow tendon pull on each sensor placement, logging (F, p, T) every control tick
// until the load cell reads the peak tension or the actuator runs out of travel.
std::vector<controller::CalibrationSample> calibration_sweep(const plant::PlantConfig& plant,
                                                             double placement, double peak,
                                                             double speed, double tick,
                                                             std::uint64_t seed);

// Sweeps every placement and keeps the samples taken while pressing on the
// sensor. Fits the surface on all but the last sweep of each placement (all
// sweeps when there is only one), derives the monotone curve and scores it on
// the last sweep.
CalibrationResult run_tension_calibration(const ExperimentConfig& cfg);
CalibrationResult run_tension_calibration(const ExperimentConfig& cfg, const plant::PlantConfig& plant);

nlohmann::json to_json(const CalibrationResult& result);

}  // namespace emgfinger::harness
