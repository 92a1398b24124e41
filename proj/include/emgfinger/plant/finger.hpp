#pragma once

#include <cstdint>

#include <json.hpp>

#include "emgfinger/random.hpp"

namespace emgfinger::plant {

// Quasi-static model of the tendon-driven two-joint finger, its linear
// actuator, the tendon load cell and the fingertip force sensor. None of these
// constants are published for the real device; they are chosen so that full
// tension (30 N) produces roughly 5 N at the fingertip.
struct PlantConfig {
  // Finger
  double moment_arm1 = 8.0;         // mm
  double moment_arm2 = 6.0;         // mm
  double stiffness1 = 60.0;         // N mm / rad
  double stiffness2 = 40.0;         // N mm / rad
  double rest_angle1 = 0.1;         // rad
  double rest_angle2 = 0.1;         // rad
  double tendon_slack = 1.0;        // mm of actuator travel before the tendon is taut
  double tendon_stiffness = 5.0;    // N / mm
  // Sensor placement: joint excursion (sum r_i * dtheta_i, mm) at first contact.
  // Non-positive disables the sensor.
  double contact_excursion = 3.0;
  double contact_compliance = 0.15; // mm of joint excursion per N beyond contact
  double fingertip_gain = 0.167;    // F / T at the reference pose
  double reference_flexion = 0.93;  // rad, theta1 + theta2 where the gain is nominal
  double gain_pose_slope = -0.05;   // relative gain change per rad of extra flexion
  double contact_gain_jitter = 0.0;   // relative, slowly varying contact-point effect
  double contact_gain_tau = 1.0;      // s
  // Actuator
  double travel = 19.0;     // mm
  double max_speed = 10.0;  // mm / s
  // Sensors
  double tension_noise = 0.01;  // N, load cell
  bool quantize_tension = true; // 12 bits over [0, 30] N
  double force_noise = 0.02;    // N, fingertip force sensor

  void validate() const;
  // Same geometry with every noise source switched off.
  PlantConfig noise_free() const;
};

nlohmann::json to_json(const PlantConfig& c);
PlantConfig plant_config_from_json(const nlohmann::json& j);

struct Pose {
  double theta1 = 0.0;
  double theta2 = 0.0;
};

struct PlantState {
  double position = 0.0;      // mm, 0 = tendon fully let out
  double tension = 0.0;       // true tendon tension, N
  double force = 0.0;         // true fingertip force, N
  Pose pose{};
  bool contact = false;
};

struct PlantObservation {
  double tension = 0.0;   // load cell reading, N
  double force = 0.0;     // fingertip force sensor reading, N
  double position = 0.0;  // mm
  double theta1 = 0.0;
  double theta2 = 0.0;
  double tension_true = 0.0;
  double force_true = 0.0;
  bool contact = false;
};

class FingerPlant {
 public:
  explicit FingerPlant(PlantConfig config = {}, std::uint64_t seed = 0);

  // Integrates the actuator (velocity in mm/s, positive pulls the tendon,
  // saturated at max_speed), then solves the finger statics at the new
  // position. dt must be positive.
  PlantObservation step(double velocity_cmd, double dt);

  // Statics only, without noise or contact jitter.
  PlantState solve(double position) const;
  PlantObservation observe() const;

  // Pose-dependent fingertip gain c(pose), and F = c(pose) * T.
  double pose_gain(const Pose& pose) const;
  double contact_force(const Pose& pose, double tension) const { return pose_gain(pose) * tension; }

  void set_position(double position);
  void set_contact_excursion(double excursion);
  const PlantState& state() const { return state_; }
  const PlantConfig& config() const { return config_; }

 private:
  PlantObservation measure();

  PlantConfig config_;
  Rng rng_;
  PlantState state_{};
  double jitter_ = 0.0;
  PlantObservation last_{};
};

// 12-bit load-cell reading over [0, 30] N.
double quantize_tension(double tension);

}  // namespace emgfinger::plant
