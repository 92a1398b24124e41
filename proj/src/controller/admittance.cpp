#include "emgfinger/controller/admittance.hpp"

#include <cmath>
#include <stdexcept>

namespace emgfinger::controller {

Admittance::Admittance(Params params, double velocity) : params_(params), velocity_(velocity) {
  if (!(params_.mass > 0.0) || !(params_.damping >= 0.0) || !(params_.period > 0.0)) {
    throw std::invalid_argument("admittance needs mass > 0, damping >= 0, period > 0");
  }
  if (!std::isfinite(velocity_)) throw std::invalid_argument("admittance velocity must be finite");
}

double Admittance::step(double tension_measured, double tension_command) {
  const double m = params_.mass;
  const double dt = params_.period;
  velocity_ = (m * velocity_ + dt * (tension_measured - tension_command)) /
              (m + params_.damping * dt);
  return velocity_;
}

void Admittance::set_velocity(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("admittance velocity must be finite");
  velocity_ = v;
}

}  // namespace emgfinger::controller
