#include "emgfinger/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace emgfinger::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

template <typename T>
void get(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

json tree_json(const estimators::TreeParams& p) {
  return {{"bags", p.bags},
          {"trees_per_bag", p.trees_per_bag},
          {"max_depth", p.max_depth},
          {"learning_rate", p.learning_rate},
          {"min_samples_leaf", p.min_samples_leaf}};
}

void tree_from(const json& j, estimators::TreeParams& p) {
  get(j, "bags", p.bags);
  get(j, "trees_per_bag", p.trees_per_bag);
  get(j, "max_depth", p.max_depth);
  get(j, "learning_rate", p.learning_rate);
  get(j, "min_samples_leaf", p.min_samples_leaf);
}

}  // namespace

std::size_t ExperimentConfig::emg_per_tick() const {
  return static_cast<std::size_t>(std::llround(emg_rate / control_rate));
}

void ExperimentConfig::validate() const {
  require(subjects > 0, "subjects must be positive");
  require(emg_rate > 0 && control_rate > 0, "rates must be positive");
  const double ratio = emg_rate / control_rate;
  require(std::abs(ratio - std::round(ratio)) < 1e-9 && ratio >= 1,
          "EMG rate must be an integer multiple of the control rate");
  require(mvc_duration > 0 && pattern_duration > 0 && pattern_hold > 0, "durations must be positive");
  require(pattern_duration >= pattern_hold, "pattern shorter than one hold");
  require(offline_window > 0 && offline_hop > 0 && online_window > 0, "windows must be positive");
  require(offline_window < pattern_duration, "window longer than the trial");
  const double hops = offline_hop / tick();
  require(std::abs(hops - std::round(hops)) < 1e-9 && hops >= 1,
          "offline hop must be a whole number of control ticks");
  require(force_sensor_noise >= 0, "negative force sensor noise");
  require(!estimators.empty(), "no estimators selected");
  require(clstm.max_steps >= 0 && clstm.epochs >= 0 && clstm.batch_size > 0, "bad C-LSTM training");
  require(std::abs(control.admittance.period - tick()) < 1e-12,
          "admittance period must equal the control tick");
  require(control.velocity_scale > 0 && control.pdm_slots > 0, "bad actuator command scaling");
  require(control.live_timeout > 0, "live timeout must be positive");
  require(!calibration.placements.empty(), "no calibration placements");
  require(calibration.tension_peak > 0 && calibration.sweep_speed > 0, "bad calibration sweep");
  require(calibration.sweeps_per_placement > 0, "no calibration sweeps");
  require(calibration.grid_points >= 2 && calibration.curve_positions >= 1, "bad curve grid");
  control.conditioner.validate();
  plant.validate();
  subject.validate();
  for (const fs::path* p : {&model_path, &tension_model_path, &activation_log}) {
    require(p->empty() || fs::exists(*p), "file not found: " + p->string());
  }
}

json to_json(const ExperimentConfig& c) {
  json est = json::array();
  for (auto k : c.estimators) est.push_back(std::string(estimators::to_string(k)));
  return {
      {"seed", c.seed},
      {"subjects", c.subjects},
      {"emg_rate_Hz", c.emg_rate},
      {"control_rate_Hz", c.control_rate},
      {"mvc_duration_s", c.mvc_duration},
      {"pattern_duration_s", c.pattern_duration},
      {"pattern_hold_s", c.pattern_hold},
      {"offline_window_s", c.offline_window},
      {"offline_hop_s", c.offline_hop},
      {"online_window_s", c.online_window},
      {"force_sensor_noise_N", c.force_sensor_noise},
      {"estimators", est},
      {"control_estimator", std::string(estimators::to_string(c.control_estimator))},
      {"clstm",
       {{"epochs", c.clstm.epochs},
        {"max_steps", c.clstm.max_steps},
        {"batch_size", c.clstm.batch_size},
        {"learning_rate", c.clstm.learning_rate}}},
      {"random_forest", tree_json(c.random_forest)},
      {"gradient_boosting", tree_json(c.gradient_boosting)},
      {"default_subject", c.default_subject},
      {"subject", plant::to_json(c.subject)},
      {"scripted",
       {{"lag_s", c.scripted.lag}, {"jitter", c.scripted.jitter}, {"jitter_tau_s", c.scripted.jitter_tau}}},
      {"plant", plant::to_json(c.plant)},
      {"control",
       {{"mass_kg", c.control.admittance.mass},
        {"damping_Ns_per_m", c.control.admittance.damping},
        {"tension_min_N", c.control.conditioner.tension_min},
        {"tension_max_N", c.control.conditioner.tension_max},
        {"slew_N", c.control.conditioner.slew},
        {"deadband_N", c.control.conditioner.deadband},
        {"force_max_N", c.control.conditioner.force_max},
        {"velocity_scale", c.control.velocity_scale},
        {"pdm_slots", c.control.pdm_slots},
        {"live_timeout_s", c.control.live_timeout}}},
      {"calibration",
       {{"placements_mm", c.calibration.placements},
        {"tension_peak_N", c.calibration.tension_peak},
        {"sweep_speed_mm_s", c.calibration.sweep_speed},
        {"sweeps_per_placement", c.calibration.sweeps_per_placement},
        {"deg_force", c.calibration.deg_force},
        {"deg_position", c.calibration.deg_position},
        {"grid_points", c.calibration.grid_points},
        {"curve_positions", c.calibration.curve_positions}}},
      {"model_path", c.model_path.string()},
      {"tension_model_path", c.tension_model_path.string()},
      {"activation_log", c.activation_log.string()},
      {"output_dir", c.output_dir.string()},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  get(j, "seed", c.seed);
  get(j, "subjects", c.subjects);
  get(j, "emg_rate_Hz", c.emg_rate);
  get(j, "control_rate_Hz", c.control_rate);
  get(j, "mvc_duration_s", c.mvc_duration);
  get(j, "pattern_duration_s", c.pattern_duration);
  get(j, "pattern_hold_s", c.pattern_hold);
  get(j, "offline_window_s", c.offline_window);
  get(j, "offline_hop_s", c.offline_hop);
  get(j, "online_window_s", c.online_window);
  get(j, "force_sensor_noise_N", c.force_sensor_noise);
  if (j.contains("estimators")) {
    c.estimators.clear();
    for (const auto& e : j.at("estimators"))
      c.estimators.push_back(estimators::estimator_kind_from_string(e.get<std::string>()));
  }
  if (j.contains("control_estimator"))
    c.control_estimator =
        estimators::estimator_kind_from_string(j.at("control_estimator").get<std::string>());
  if (j.contains("clstm")) {
    const auto& t = j.at("clstm");
    get(t, "epochs", c.clstm.epochs);
    get(t, "max_steps", c.clstm.max_steps);
    get(t, "batch_size", c.clstm.batch_size);
    get(t, "learning_rate", c.clstm.learning_rate);
  }
  if (j.contains("random_forest")) tree_from(j.at("random_forest"), c.random_forest);
  if (j.contains("gradient_boosting")) tree_from(j.at("gradient_boosting"), c.gradient_boosting);
  get(j, "default_subject", c.default_subject);
  if (j.contains("subject")) c.subject = plant::subject_params_from_json(j.at("subject"));
  if (j.contains("scripted")) {
    const auto& s = j.at("scripted");
    get(s, "lag_s", c.scripted.lag);
    get(s, "jitter", c.scripted.jitter);
    get(s, "jitter_tau_s", c.scripted.jitter_tau);
  }
  if (j.contains("plant")) c.plant = plant::plant_config_from_json(j.at("plant"));
  if (j.contains("control")) {
    const auto& k = j.at("control");
    get(k, "mass_kg", c.control.admittance.mass);
    get(k, "damping_Ns_per_m", c.control.admittance.damping);
    get(k, "tension_min_N", c.control.conditioner.tension_min);
    get(k, "tension_max_N", c.control.conditioner.tension_max);
    get(k, "slew_N", c.control.conditioner.slew);
    get(k, "deadband_N", c.control.conditioner.deadband);
    get(k, "force_max_N", c.control.conditioner.force_max);
    get(k, "velocity_scale", c.control.velocity_scale);
    get(k, "pdm_slots", c.control.pdm_slots);
    get(k, "live_timeout_s", c.control.live_timeout);
  }
  c.control.admittance.period = 1.0 / c.control_rate;
  if (j.contains("calibration")) {
    const auto& k = j.at("calibration");
    get(k, "placements_mm", c.calibration.placements);
    get(k, "tension_peak_N", c.calibration.tension_peak);
    get(k, "sweep_speed_mm_s", c.calibration.sweep_speed);
    get(k, "sweeps_per_placement", c.calibration.sweeps_per_placement);
    get(k, "deg_force", c.calibration.deg_force);
    get(k, "deg_position", c.calibration.deg_position);
    get(k, "grid_points", c.calibration.grid_points);
    get(k, "curve_positions", c.calibration.curve_positions);
  }
  auto path = [&](const char* key, fs::path& field) {
    if (j.contains(key)) field = j.at(key).get<std::string>();
  };
  path("model_path", c.model_path);
  path("tension_model_path", c.tension_model_path);
  path("activation_log", c.activation_log);
  path("output_dir", c.output_dir);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  ExperimentConfig c = config_from_json(read_json(path));
  // Relative file references are resolved against the config file's directory.
  const fs::path base = path.parent_path();
  for (fs::path* p : {&c.model_path, &c.tension_model_path, &c.activation_log}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  c.validate();
  return c;
}

std::uint64_t subject_seed(const ExperimentConfig& cfg, std::size_t subject) {
  return derive_seed(cfg.seed, 1000 + subject);
}

plant::SubjectParams subject_params(const ExperimentConfig& cfg, std::size_t subject) {
  if (cfg.default_subject) return cfg.subject;
  return plant::SubjectParams::sample(subject_seed(cfg, subject));
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

}  // namespace emgfinger::harness
