#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "emgfinger/dsp/filter.hpp"
#include "emgfinger/random.hpp"
#include "emgfinger/types.hpp"

namespace emgfinger::plant {

// Virtual subject: muscle activation a in [0, 1] drives both the surface EMG
// amplitude and the true fingertip force
//   F(a) = force_max * (exp(gamma a) - 1) / (exp(gamma) - 1).
struct SubjectParams {
  double gamma = 1.8;
  double force_max = 8.0;             // N
  double co_contraction = 0.35;       // extensor amplitude / flexor amplitude
  double activation_exponent = 0.9;   // EMG amplitude ~ a^0.9
  double noise_floor = 0.05;          // EMG amplitude at rest
  double emg_scale = 1.0;             // EMG amplitude added at full activation
  double interference = 0.01;         // 50 Hz line amplitude
  double line_frequency = 50.0;       // Hz

  void validate() const;
  // Per-subject variation around the defaults, fully determined by `seed`.
  static SubjectParams sample(std::uint64_t seed);
};

nlohmann::json to_json(const SubjectParams& p);
SubjectParams subject_params_from_json(const nlohmann::json& j);

// F(a). Throws std::invalid_argument when a is outside [0, 1].
double subject_force(const SubjectParams& subject, double activation);
// Inverse of subject_force, clamped to [0, 1].
double activation_for_force(const SubjectParams& subject, double force);
// EMG amplitude (flexor channel) at activation a.
double emg_amplitude(const SubjectParams& subject, double activation);

// Streaming surface-EMG generator: band-limited (20-200 Hz) unit-variance
// Gaussian noise per channel, scaled by the amplitude law, plus power-line
// interference. Deterministic per seed.
class EmgGenerator {
 public:
  EmgGenerator(SubjectParams subject, double sample_rate, std::uint64_t seed);

  EmgFrame next(double activation);
  double sample_rate() const { return sample_rate_; }
  std::uint64_t samples_emitted() const { return index_; }

 private:
  SubjectParams subject_;
  double sample_rate_;
  Rng rng_;
  dsp::FilterChain shaping_;
  double noise_gain_ = 1.0;
  std::uint64_t index_ = 0;
  std::array<double, kEmgChannels> phase_{};
};

// One EMG frame per activation sample (activation given at the EMG rate).
std::vector<EmgFrame> emg_generate(const SubjectParams& subject, std::span<const double> activation,
                                   double sample_rate, std::uint64_t seed);

// Emulated human tracking of a force target: the intended activation
// follows the target through a first-order lag with slow seeded jitter.
class ScriptedActivation {
 public:
  struct Params {
    double lag = 0.3;          // s
    double jitter = 0.03;      // activation units
    double jitter_tau = 0.5;   // s
  };

  ScriptedActivation(SubjectParams subject, Params params, std::uint64_t seed);

  // Advances by dt towards the activation that produces `target_force`
  // (newtons of this subject's force) and returns the activation in [0, 1].
  double step(double target_force, double dt);
  double current() const { return output_; }

 private:
  SubjectParams subject_;
  Params params_;
  Rng rng_;
  double state_ = 0.0;
  double jitter_ = 0.0;
  double output_ = 0.0;
};

}  // namespace emgfinger::plant
