#pragma once

namespace emgfinger::controller {

struct ConditionerConfig {
  double tension_min = 0.0;   // N
  double tension_max = 30.0;  // N
  double slew = 2.0;          // N per control iteration
  double deadband = 1.0;      // N, forces strictly below are zeroed
  double force_max = 8.0;     // N, estimator output range [0, force_max]

  // Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

// Zeroes forces strictly below the deadband.
double condition_force(double force_raw, const ConditionerConfig& cfg);

// Clamp to [tension_min, tension_max], then limit the change from the previous
// command to +/- slew.
double condition_tension(double tension_new, double tension_prev, const ConditionerConfig& cfg);

// Estimator output (fraction of maximum force) to newtons in [0, force_max].
double scale_force_output(double normalized, const ConditionerConfig& cfg);

}  // namespace emgfinger::controller
