#pragma once

namespace emgfinger::controller {

// Virtual mass-damper driven by the tension error,
//   m dv/dt + d v = T - T_cmd,
// discretized with the implicit update
//   v_t = (m v_{t-1} + dt (T - T_cmd)) / (m + d dt).
// Positive velocity releases the tendon: tension above the command lets it out.
class Admittance {
 public:
  struct Params {
    double mass = 1.0;     // kg
    double damping = 1.0;  // N s / m
    double period = 0.02;  // s, 50 Hz loop
  };

  Admittance() : Admittance(Params{}) {}
  explicit Admittance(Params params, double velocity = 0.0);

  double step(double tension_measured, double tension_command);

  double velocity() const { return velocity_; }
  // Overwrites the stored velocity, e.g. with the saturated value the actuator
  // actually executed.
  void set_velocity(double v);
  const Params& params() const { return params_; }
  void reset() { velocity_ = 0.0; }

 private:
  Params params_;
  double velocity_;
};

}  // namespace emgfinger::controller
