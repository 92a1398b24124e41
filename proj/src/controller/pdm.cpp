#include "emgfinger/controller/pdm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace emgfinger::controller {

std::size_t PulseTrain::count() const {
  return static_cast<std::size_t>(std::count(pulses.begin(), pulses.end(), std::uint8_t{1}));
}

namespace {

double density_of(double velocity, double max_velocity) {
  if (!(max_velocity > 0.0)) throw std::invalid_argument("max velocity must be positive");
  if (!std::isfinite(velocity) || std::abs(velocity) > max_velocity) {
    throw std::invalid_argument("velocity command exceeds the actuator maximum");
  }
  return std::abs(velocity) / max_velocity;
}

}  // namespace

PulseTrain pdm_generate(double velocity, double max_velocity, std::size_t slots) {
  PdmGenerator gen(max_velocity, slots);
  return gen.next(velocity);
}

PdmGenerator::PdmGenerator(double max_velocity, std::size_t slots_per_tick)
    : max_velocity_(max_velocity), slots_(slots_per_tick) {
  if (!(max_velocity_ > 0.0)) throw std::invalid_argument("max velocity must be positive");
}

PulseTrain PdmGenerator::next(double velocity) {
  const double density = density_of(velocity, max_velocity_);
  PulseTrain train;
  train.release = velocity > 0.0;
  train.pulses.resize(slots_, 0);
  for (std::size_t i = 0; i < slots_; ++i) {
    accumulator_ += density;
    if (accumulator_ >= 1.0) {
      accumulator_ -= 1.0;
      train.pulses[i] = 1;
      ++total_;
    }
  }
  return train;
}

}  // namespace emgfinger::controller
