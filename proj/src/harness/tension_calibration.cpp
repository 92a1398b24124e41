#include "emgfinger/harness/tension_calibration.hpp"

#include <algorithm>
#include <stdexcept>

#include "emgfinger/estimators/metrics.hpp"
#include "emgfinger/plant/finger.hpp"

namespace emgfinger::harness {

using controller::CalibrationSample;

namespace {

// Fingertip force above which a sample counts as pressing on the sensor. Only
// those samples enter the fit and the score: in free motion the force is zero
// whatever the tension.
constexpr double kContactForce = 0.1;

std::vector<CalibrationSample> in_contact(const std::vector<CalibrationSample>& sweep) {
  std::vector<CalibrationSample> out;
  for (const auto& s : sweep)
    if (s.force >= kContactForce) out.push_back(s);
  return out;
}

struct Scores {
  double rmse;
  double r2;
};

Scores score(const controller::TensionCurve1D& curve, std::span<const CalibrationSample> samples) {
  std::vector<double> measured, predicted;
  measured.reserve(samples.size());
  predicted.reserve(samples.size());
  for (const auto& s : samples) {
    measured.push_back(s.force);
    predicted.push_back(curve.tension_to_force(s.tension));
  }
  return {estimators::rmse(measured, predicted), estimators::r_squared(measured, predicted)};
}

}  // namespace

std::vector<CalibrationSample> calibration_sweep(const plant::PlantConfig& plant_cfg,
                                                 double placement, double peak, double speed,
                                                 double tick, std::uint64_t seed) {
  plant::PlantConfig pc = plant_cfg;
  pc.contact_excursion = placement;
  plant::FingerPlant finger(pc, seed);
  std::vector<CalibrationSample> out;
  while (true) {
    const auto obs = finger.step(speed, tick);
    out.push_back({obs.force, obs.position, obs.tension});
    if (obs.tension >= peak || obs.position >= pc.travel) break;
  }
  return out;
}

CalibrationResult run_tension_calibration(const ExperimentConfig& cfg) {
  return run_tension_calibration(cfg, cfg.plant);
}

CalibrationResult run_tension_calibration(const ExperimentConfig& cfg,
                                          const plant::PlantConfig& plant_cfg) {
  const CalibrationConfig& cc = cfg.calibration;
  CalibrationResult result;
  std::vector<std::vector<CalibrationSample>> eval_sets;
  for (std::size_t k = 0; k < cc.placements.size(); ++k) {
    std::vector<CalibrationSample> last;
    for (int s = 0; s < cc.sweeps_per_placement; ++s) {
      const std::uint64_t seed = derive_seed(cfg.seed, 5000 + 100 * k + static_cast<std::uint64_t>(s));
      auto sweep = in_contact(calibration_sweep(plant_cfg, cc.placements[k], cc.tension_peak, cc.sweep_speed,
                                     cfg.tick(), seed));
      const bool held_out = cc.sweeps_per_placement > 1 && s == cc.sweeps_per_placement - 1;
      if (!held_out) result.fit_samples.insert(result.fit_samples.end(), sweep.begin(), sweep.end());
      if (held_out || cc.sweeps_per_placement == 1) last = std::move(sweep);
    }
    result.eval_samples.insert(result.eval_samples.end(), last.begin(), last.end());
    eval_sets.push_back(std::move(last));
  }

  const auto surface = controller::fit_surface(result.fit_samples, cc.deg_force, cc.deg_position);
  double p_lo = 0.0, p_hi = 0.0;
  bool any = false;
  for (const auto& s : result.fit_samples) {
    p_lo = any ? std::min(p_lo, s.position) : s.position;
    p_hi = any ? std::max(p_hi, s.position) : s.position;
    any = true;
  }
  if (!any || !(p_hi > p_lo))
    throw controller::DegenerateSamplingError("calibration sweep never pressed on the sensor");
  const auto positions = controller::uniform_grid(p_lo, p_hi, cc.curve_positions);
  const auto grid = controller::uniform_grid(0.0, cfg.control.conditioner.force_max, cc.grid_points);
  result.model.surface = surface;
  result.model.curve = controller::derive_curve_1d(surface, positions, grid);
  result.model.config = {{"deg_force", cc.deg_force},
                         {"deg_position", cc.deg_position},
                         {"positions_mm", positions},
                         {"placements_mm", cc.placements},
                         {"seed", cfg.seed}};

  const Scores all = score(result.model.curve, result.eval_samples);
  result.force_rmse = all.rmse;
  result.force_r2 = all.r2;
  for (const auto& set : eval_sets) result.placement_rmse.push_back(score(result.model.curve, set).rmse);
  return result;
}

nlohmann::json to_json(const CalibrationResult& r) {
  return {{"schema_version", kReportSchemaVersion},
          {"report", "tension_calibration"},
          {"fit_samples", r.fit_samples.size()},
          {"eval_samples", r.eval_samples.size()},
          {"surface_residual_rmse_N", r.model.surface.residual_rmse()},
          {"force_rmse_N", r.force_rmse},
          {"force_r2", r.force_r2},
          {"placement_force_rmse_N", r.placement_rmse},
          {"model", controller::to_json(r.model)}};
}

}  // namespace emgfinger::harness
