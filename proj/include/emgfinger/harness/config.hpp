#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "emgfinger/controller/admittance.hpp"
#include "emgfinger/controller/conditioner.hpp"
#include "emgfinger/estimators/clstm.hpp"
#include "emgfinger/estimators/estimator.hpp"
#include "emgfinger/estimators/trees.hpp"
#include "emgfinger/plant/finger.hpp"
#include "emgfinger/plant/subject.hpp"

namespace emgfinger::harness {

inline constexpr int kReportSchemaVersion = 1;

struct CalibrationConfig {
  // Fingertip sensor placements (joint excursion at first contact, mm); each
  // placement gets its own sweep, like separate sessions with the sensor moved.
  std::vector<double> placements{2.0, 2.5, 3.0, 3.5, 4.0};
  double tension_peak = 30.0;  // N, sweep stops here
  double sweep_speed = 1.0;    // mm/s
  int sweeps_per_placement = 2;
  int deg_force = 3;
  int deg_position = 2;
  std::size_t grid_points = 33;  // force grid over [0, force_max]
  std::size_t curve_positions = 10;
};

struct ControlConfig {
  controller::Admittance::Params admittance{};
  controller::ConditionerConfig conditioner{};
  // Actuator mm/s per m/s of admittance velocity: 1000 commands the admittance
  // velocity as is.
  double velocity_scale = 1000.0;
  std::size_t pdm_slots = 200;  // PDM slots per control tick
  double live_timeout = 1.0;    // s without client input before holding
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t subjects = 10;

  double emg_rate = 2000.0;     // Hz
  double control_rate = 50.0;   // Hz
  double mvc_duration = 30.0;   // s
  double pattern_duration = 250.0;  // s
  double pattern_hold = 5.0;        // s
  double offline_window = 0.5;  // s
  double offline_hop = 0.04;    // s, a whole number of ticks
  double online_window = 0.2;   // s
  double force_sensor_noise = 0.02;  // N, F/T sensor during offline trials

  std::vector<estimators::EstimatorKind> estimators{
      estimators::EstimatorKind::Linear, estimators::EstimatorKind::RandomForest,
      estimators::EstimatorKind::GradientBoosting, estimators::EstimatorKind::Clstm};
  estimators::EstimatorKind control_estimator = estimators::EstimatorKind::Clstm;
  estimators::TrainConfig clstm{};
  estimators::TreeParams random_forest = estimators::TreeParams::random_forest();
  estimators::TreeParams gradient_boosting = estimators::TreeParams::gradient_boosting();

  // When set, every subject uses `subject`; otherwise parameters are sampled per subject seed.
  bool default_subject = false;
  plant::SubjectParams subject{};
  plant::ScriptedActivation::Params scripted{};
  plant::PlantConfig plant{};
  ControlConfig control{};
  CalibrationConfig calibration{};

  std::filesystem::path model_path;          // trained estimator (control runs)
  std::filesystem::path tension_model_path;  // fitted tension model (control runs)
  std::filesystem::path activation_log;      // replay source
  std::filesystem::path output_dir = "out";

  // Throws std::invalid_argument when a value is out of range or a referenced
  // file does not exist.
  void validate() const;

  std::size_t emg_per_tick() const;
  double tick() const { return 1.0 / control_rate; }
};

nlohmann::json to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Seeds of the independent random streams used by the experiments.
std::uint64_t subject_seed(const ExperimentConfig& cfg, std::size_t subject);
plant::SubjectParams subject_params(const ExperimentConfig& cfg, std::size_t subject);

// Writes `doc` with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace emgfinger::harness
