#include "emgfinger/plant/finger.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace emgfinger::plant {

namespace {

constexpr double kLoadCellRange = 30.0;
constexpr double kLoadCellLevels = 4095.0;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void PlantConfig::validate() const {
  require(moment_arm1 > 0 && moment_arm2 > 0, "plant: moment arms must be positive");
  require(stiffness1 > 0 && stiffness2 > 0, "plant: joint stiffness must be positive");
  require(tendon_slack >= 0, "plant: negative tendon slack");
  require(tendon_stiffness > 0, "plant: tendon stiffness must be positive");
  require(contact_compliance >= 0, "plant: negative contact compliance");
  require(fingertip_gain > 0, "plant: fingertip gain must be positive");
  require(contact_gain_jitter >= 0 && contact_gain_tau > 0, "plant: bad contact jitter");
  require(travel > 0 && max_speed > 0, "plant: bad actuator limits");
  require(tension_noise >= 0 && force_noise >= 0, "plant: negative sensor noise");
}

PlantConfig PlantConfig::noise_free() const {
  PlantConfig c = *this;
  c.contact_gain_jitter = 0.0;
  c.tension_noise = 0.0;
  c.quantize_tension = false;
  c.force_noise = 0.0;
  return c;
}

nlohmann::json to_json(const PlantConfig& c) {
  return {
      {"moment_arm1_mm", c.moment_arm1},
      {"moment_arm2_mm", c.moment_arm2},
      {"stiffness1_Nmm_per_rad", c.stiffness1},
      {"stiffness2_Nmm_per_rad", c.stiffness2},
      {"rest_angle1_rad", c.rest_angle1},
      {"rest_angle2_rad", c.rest_angle2},
      {"tendon_slack_mm", c.tendon_slack},
      {"tendon_stiffness_N_per_mm", c.tendon_stiffness},
      {"contact_excursion_mm", c.contact_excursion},
      {"contact_compliance_mm_per_N", c.contact_compliance},
      {"fingertip_gain", c.fingertip_gain},
      {"reference_flexion_rad", c.reference_flexion},
      {"gain_pose_slope", c.gain_pose_slope},
      {"contact_gain_jitter", c.contact_gain_jitter},
      {"contact_gain_tau_s", c.contact_gain_tau},
      {"travel_mm", c.travel},
      {"max_speed_mm_s", c.max_speed},
      {"tension_noise_N", c.tension_noise},
      {"quantize_tension", c.quantize_tension},
      {"force_noise_N", c.force_noise},
  };
}

PlantConfig plant_config_from_json(const nlohmann::json& j) {
  PlantConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("moment_arm1_mm", c.moment_arm1);
  get("moment_arm2_mm", c.moment_arm2);
  get("stiffness1_Nmm_per_rad", c.stiffness1);
  get("stiffness2_Nmm_per_rad", c.stiffness2);
  get("rest_angle1_rad", c.rest_angle1);
  get("rest_angle2_rad", c.rest_angle2);
  get("tendon_slack_mm", c.tendon_slack);
  get("tendon_stiffness_N_per_mm", c.tendon_stiffness);
  get("contact_excursion_mm", c.contact_excursion);
  get("contact_compliance_mm_per_N", c.contact_compliance);
  get("fingertip_gain", c.fingertip_gain);
  get("reference_flexion_rad", c.reference_flexion);
  get("gain_pose_slope", c.gain_pose_slope);
  get("contact_gain_jitter", c.contact_gain_jitter);
  get("contact_gain_tau_s", c.contact_gain_tau);
  get("travel_mm", c.travel);
  get("max_speed_mm_s", c.max_speed);
  get("tension_noise_N", c.tension_noise);
  get("quantize_tension", c.quantize_tension);
  get("force_noise_N", c.force_noise);
  c.validate();
  return c;
}

double quantize_tension(double tension) {
  const double clipped = std::clamp(tension, 0.0, kLoadCellRange);
  const double step = kLoadCellRange / kLoadCellLevels;
  return std::round(clipped / step) * step;
}

FingerPlant::FingerPlant(PlantConfig config, std::uint64_t seed)
    : config_(config), rng_(seed) {
  config_.validate();
  state_ = solve(0.0);
  last_ = observe();
}

double FingerPlant::pose_gain(const Pose& pose) const {
  const double flexion = pose.theta1 + pose.theta2;
  const double g = config_.fingertip_gain *
                   (1.0 + config_.gain_pose_slope * (flexion - config_.reference_flexion));
  return std::max(g, 0.0);
}

PlantState FingerPlant::solve(double position) const {
  const PlantConfig& c = config_;
  PlantState s;
  s.position = position;
  // Joint compliance seen from the tendon, mm / N.
  const double joint_c = c.moment_arm1 * c.moment_arm1 / c.stiffness1 +
                         c.moment_arm2 * c.moment_arm2 / c.stiffness2;
  const double tendon_c = 1.0 / c.tendon_stiffness;
  const double stretch = position - c.tendon_slack;

  double excursion = 0.0;  // sum r_i dtheta_i
  if (stretch > 0.0) {
    const double t_free = stretch / (joint_c + tendon_c);
    excursion = t_free * joint_c;
    s.tension = t_free;
    if (c.contact_excursion > 0.0 && excursion >= c.contact_excursion) {
      const double t_contact = c.contact_excursion / joint_c;
      const double at_contact = c.contact_excursion + t_contact * tendon_c;
      s.tension = t_contact + (stretch - at_contact) / (tendon_c + c.contact_compliance);
      excursion = c.contact_excursion + c.contact_compliance * (s.tension - t_contact);
      s.contact = true;
    }
  }
  // Excursion splits between the joints in proportion to their compliance.
  s.pose.theta1 = c.rest_angle1 + (c.moment_arm1 / c.stiffness1) * excursion / joint_c;
  s.pose.theta2 = c.rest_angle2 + (c.moment_arm2 / c.stiffness2) * excursion / joint_c;
  s.force = s.contact ? contact_force(s.pose, s.tension) : 0.0;
  return s;
}

void FingerPlant::set_position(double position) {
  state_ = solve(std::clamp(position, 0.0, config_.travel));
  last_ = observe();
}

void FingerPlant::set_contact_excursion(double excursion) {
  config_.contact_excursion = excursion;
  state_ = solve(state_.position);
  last_ = observe();
}

PlantObservation FingerPlant::observe() const {
  PlantObservation o;
  o.tension = state_.tension;
  o.force = state_.force;
  o.position = state_.position;
  o.theta1 = state_.pose.theta1;
  o.theta2 = state_.pose.theta2;
  o.tension_true = state_.tension;
  o.force_true = state_.force;
  o.contact = state_.contact;
  return o;
}

PlantObservation FingerPlant::measure() {
  PlantObservation o = observe();
  o.tension = state_.tension + config_.tension_noise * rng_.normal();
  if (config_.quantize_tension) o.tension = quantize_tension(o.tension);
  o.tension = std::max(o.tension, 0.0);
  o.force = std::max(state_.force + config_.force_noise * rng_.normal(), 0.0);
  return o;
}

PlantObservation FingerPlant::step(double velocity_cmd, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("plant step: dt must be positive");
  if (!std::isfinite(velocity_cmd)) throw std::invalid_argument("plant step: velocity not finite");
  const double v = std::clamp(velocity_cmd, -config_.max_speed, config_.max_speed);
  const double position = std::clamp(state_.position + v * dt, 0.0, config_.travel);
  state_ = solve(position);

  if (config_.contact_gain_jitter > 0.0) {
    // Ornstein-Uhlenbeck, exact discretization.
    const double decay = std::exp(-dt / config_.contact_gain_tau);
    jitter_ = decay * jitter_ +
              config_.contact_gain_jitter * std::sqrt(1.0 - decay * decay) * rng_.normal();
    state_.force *= std::max(1.0 + jitter_, 0.0);
  }
  last_ = measure();
  return last_;
}

}  // namespace emgfinger::plant
