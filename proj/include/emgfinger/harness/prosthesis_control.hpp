#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include <json.hpp>

#include "emgfinger/controller/admittance.hpp"
#include "emgfinger/controller/pdm.hpp"
#include "emgfinger/controller/tension_model.hpp"
#include "emgfinger/estimators/estimator.hpp"
#include "emgfinger/harness/config.hpp"
#include "emgfinger/harness/force_estimation.hpp"
#include "emgfinger/harness/record.hpp"
#include "emgfinger/harness/tension_calibration.hpp"
#include "emgfinger/plant/finger.hpp"
#include "emgfinger/plant/pattern.hpp"
#include "emgfinger/plant/subject.hpp"

namespace emgfinger::harness {

// Muscle activation, one value per control tick.
class ActivationSource {
 public:
  virtual ~ActivationSource() = default;
  // `target` is the force pattern value in newtons at time t.
  virtual double next(double t, double target) = 0;
};

// Emulated subject: aims at target / force_max of its own maximum force.
class ScriptedSource : public ActivationSource {
 public:
  ScriptedSource(const ExperimentConfig& cfg, const plant::SubjectParams& subject, std::uint64_t seed);
  double next(double t, double target) override;

 private:
  plant::ScriptedActivation human_;
  double tick_;
  double gain_;
};

// Plays back a logged activation series; holds the last value once exhausted.
class ReplaySource : public ActivationSource {
 public:
  explicit ReplaySource(std::vector<double> values);
  double next(double t, double target) override;

 private:
  std::vector<double> values_;
  std::size_t index_ = 0;
};

// Activation pushed from another thread, latest value wins. When no value
// arrives for longer than `timeout` (control time), the last one is held and a
// timeout is counted.
class LiveSource : public ActivationSource {
 public:
  LiveSource(double tick, double timeout);
  // Thread-safe. Throws std::invalid_argument outside [0, 1].
  void submit(double activation);
  double next(double t, double target) override;

  std::size_t timeouts() const { return timeouts_; }
  double longest_gap() const { return longest_gap_; }

 private:
  std::atomic<double> latest_{0.0};
  std::atomic<std::uint64_t> sequence_{0};
  std::uint64_t seen_ = 0;
  double tick_;
  std::uint64_t limit_;  // idle ticks tolerated
  std::uint64_t idle_ = 0;
  double longest_gap_ = 0.0;
  bool timed_out_ = false;
  std::size_t timeouts_ = 0;
  double current_ = 0.0;
};

std::vector<double> read_activation_log(const std::filesystem::path& path);

// Inner loop: conditioner, admittance law on the last load-cell reading,
// velocity saturation, PDM pulses and the plant.
class TensionServo {
 public:
  struct Tick {
    double tension_command = 0.0;
    double admittance_velocity = 0.0;  // m/s, positive releases
    double actuator_velocity = 0.0;    // mm/s delivered, positive pulls
    std::size_t pulses = 0;
    plant::PlantObservation obs{};
  };

  TensionServo(const ExperimentConfig& cfg, const plant::PlantConfig& plant, std::uint64_t seed);

  Tick step(double tension_request);
  const plant::FingerPlant& plant() const { return plant_; }
  double last_tension() const { return measured_; }

 private:
  controller::ConditionerConfig conditioner_;
  controller::Admittance admittance_;
  controller::PdmGenerator pdm_;
  plant::FingerPlant plant_;
  double velocity_scale_;
  double max_speed_;
  double slots_;
  double tick_;
  double previous_command_ = 0.0;
  double measured_ = 0.0;
};

struct TensionTrace {
  std::vector<double> t;
  std::vector<double> command;
  std::vector<double> tension;
};

// Drives the servo directly with a tension request profile.
TensionTrace run_tension_tracking(const ExperimentConfig& cfg, const std::function<double(double)>& request,
                                  double duration, std::uint64_t seed);

// Time after `from` when `y` last entered and then stayed inside target +/- band,
// measured from `from`. Negative when it never settles.
double settling_time(const std::vector<double>& t, const std::vector<double>& y, double target,
                     double band, double from, double until);

struct ControlSetup {
  estimators::Estimator estimator;
  controller::TensionModel tension;
  plant::SubjectParams subject{};
};

// Loads the model files named in the config, or trains/calibrates from the seed
// when they are absent (subject 0, first trial).
ControlSetup prepare_control(const ExperimentConfig& cfg);

// Outer loop, one call per 50 Hz tick.
class ControlLoop {
 public:
  struct Tick {
    double t = 0.0;
    double target = 0.0;
    double activation = 0.0;
    double estimate = 0.0;  // estimator output, fraction of maximum force
    double command = 0.0;   // N
    TensionServo::Tick servo{};
  };

  ControlLoop(const ExperimentConfig& cfg, const ControlSetup& setup, std::uint64_t seed);

  // Throws std::invalid_argument when activation is outside [0, 1].
  Tick step(double activation, double target);
  double time() const;

 private:
  const ExperimentConfig& cfg_;
  const ControlSetup& setup_;
  plant::EmgGenerator emg_;
  FeatureExtractor features_;
  std::deque<FeatureVector> history_;
  std::vector<FeatureVector> sequence_;
  std::size_t stride_;
  std::size_t context_;
  TensionServo servo_;
  std::uint64_t tick_ = 0;
};

struct ControlResult {
  TrialRecord record;
  ControlMetrics metrics;
  std::size_t timeouts = 0;
  bool completed = true;  // false when on_tick ended the run early
};

plant::ForcePattern control_pattern(const ExperimentConfig& cfg);

using TickObserver = std::function<bool(const ControlLoop::Tick&)>;

// Runs the full pipeline for the pattern duration. `on_tick`, when set, sees
// every tick as it is produced; returning false stops the run after that tick.
ControlResult run_prosthesis_control_experiment(const ExperimentConfig& cfg, const ControlSetup& setup,
                                                ActivationSource& source, const TickObserver& on_tick = {});

nlohmann::json to_json(const ControlResult& result);

}  // namespace emgfinger::harness
