#pragma once

#include <cstdint>
#include <vector>

namespace emgfinger::controller {

struct PulseTrain {
  bool release = false;  // direction: true lets the tendon out
  std::vector<std::uint8_t> pulses;

  std::size_t count() const;
};

// First-order sigma-delta with the accumulator starting at one half, so a
// single call emits round(density * slots) pulses spread evenly over the
// slots. Throws std::invalid_argument when |velocity| exceeds max_velocity.
PulseTrain pdm_generate(double velocity, double max_velocity, std::size_t slots);

// Streaming variant: the accumulator carries over between control ticks.
class PdmGenerator {
 public:
  PdmGenerator(double max_velocity, std::size_t slots_per_tick);

  PulseTrain next(double velocity);
  std::uint64_t total_pulses() const { return total_; }

 private:
  double max_velocity_;
  std::size_t slots_;
  double accumulator_ = 0.5;
  std::uint64_t total_ = 0;
};

}  // namespace emgfinger::controller
