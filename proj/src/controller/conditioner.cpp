#include "emgfinger/controller/conditioner.hpp"

#include <algorithm>
#include <stdexcept>

namespace emgfinger::controller {

void ConditionerConfig::validate() const {
  if (!(tension_min < tension_max)) throw std::invalid_argument("tension clamp needs low < high");
  if (!(slew > 0.0)) throw std::invalid_argument("slew limit must be positive");
  if (!(deadband >= 0.0)) throw std::invalid_argument("deadband must be non-negative");
  if (!(force_max > 0.0)) throw std::invalid_argument("force range must be positive");
}

double condition_force(double force_raw, const ConditionerConfig& cfg) {
  return force_raw < cfg.deadband ? 0.0 : force_raw;
}

double condition_tension(double tension_new, double tension_prev, const ConditionerConfig& cfg) {
  const double clamped = std::clamp(tension_new, cfg.tension_min, cfg.tension_max);
  return std::clamp(clamped, tension_prev - cfg.slew, tension_prev + cfg.slew);
}

double scale_force_output(double normalized, const ConditionerConfig& cfg) {
  return std::clamp(normalized * cfg.force_max, 0.0, cfg.force_max);
}

}  // namespace emgfinger::controller
