#include "emgfinger/harness/prosthesis_control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "emgfinger/controller/conditioner.hpp"

namespace emgfinger::harness {

using nlohmann::json;

ScriptedSource::ScriptedSource(const ExperimentConfig& cfg, const plant::SubjectParams& subject,
                               std::uint64_t seed)
    : human_(subject, cfg.scripted, seed),
      tick_(cfg.tick()),
      gain_(subject.force_max / cfg.control.conditioner.force_max) {}

double ScriptedSource::next(double, double target) { return human_.step(target * gain_, tick_); }

ReplaySource::ReplaySource(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("activation log value outside [0, 1]");
  }
}

double ReplaySource::next(double, double) {
  if (values_.empty()) return 0.0;
  const double v = values_[std::min(index_, values_.size() - 1)];
  ++index_;
  return v;
}

LiveSource::LiveSource(double tick, double timeout)
    : tick_(tick), limit_(static_cast<std::uint64_t>(std::floor(timeout / tick + 1e-9))) {
  if (!(tick > 0.0) || !(timeout > 0.0)) throw std::invalid_argument("live source needs positive tick and timeout");
}

void LiveSource::submit(double activation) {
  if (!(activation >= 0.0 && activation <= 1.0))
    throw std::invalid_argument("activation outside [0, 1]");
  latest_.store(activation, std::memory_order_relaxed);
  sequence_.fetch_add(1, std::memory_order_release);
}

double LiveSource::next(double, double) {
  const std::uint64_t seq = sequence_.load(std::memory_order_acquire);
  if (seq != seen_) {
    seen_ = seq;
    current_ = latest_.load(std::memory_order_relaxed);
    idle_ = 0;
    timed_out_ = false;
  } else {
    ++idle_;
    longest_gap_ = std::max(longest_gap_, static_cast<double>(idle_) * tick_);
    if (idle_ > limit_ && !timed_out_) {
      timed_out_ = true;
      ++timeouts_;
    }
  }
  return current_;
}

std::vector<double> read_activation_log(const std::filesystem::path& path) {
  // Either a trial record (activation column) or one value per line.
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string first;
  std::getline(in, first);
  if (first.rfind("t,", 0) == 0) {
    in.close();
    return read_record_csv(path).activation;
  }
  std::vector<double> out;
  auto take = [&](const std::string& line) {
    if (line.empty() || line == "activation") return;
    out.push_back(std::stod(line));
  };
  take(first);
  for (std::string line; std::getline(in, line);) take(line);
  return out;
}

TensionServo::TensionServo(const ExperimentConfig& cfg, const plant::PlantConfig& plant,
                           std::uint64_t seed)
    : conditioner_(cfg.control.conditioner),
      admittance_(cfg.control.admittance),
      pdm_(plant.max_speed, cfg.control.pdm_slots),
      plant_(plant, seed),
      velocity_scale_(cfg.control.velocity_scale),
      max_speed_(plant.max_speed),
      slots_(static_cast<double>(cfg.control.pdm_slots)),
      tick_(cfg.tick()) {
  measured_ = plant_.observe().tension;
}

TensionServo::Tick TensionServo::step(double tension_request) {
  Tick out;
  out.tension_command = controller::condition_tension(tension_request, previous_command_, conditioner_);
  previous_command_ = out.tension_command;
  out.admittance_velocity = admittance_.step(measured_, out.tension_command);
  // Positive admittance velocity lets the tendon out, i.e. moves the actuator back.
  const double wanted = std::clamp(-velocity_scale_ * out.admittance_velocity, -max_speed_, max_speed_);
  // Keep the virtual state at what the actuator can actually do.
  admittance_.set_velocity(-wanted / velocity_scale_);
  // The pulse generator takes the release-positive convention.
  const auto train = pdm_.next(-wanted);
  out.pulses = train.count();
  const double delivered = static_cast<double>(out.pulses) / slots_ * max_speed_;
  out.actuator_velocity = train.release ? -delivered : delivered;
  out.obs = plant_.step(out.actuator_velocity, tick_);
  measured_ = out.obs.tension;
  return out;
}

TensionTrace run_tension_tracking(const ExperimentConfig& cfg,
                                  const std::function<double(double)>& request, double duration,
                                  std::uint64_t seed) {
  TensionServo servo(cfg, cfg.plant, seed);
  TensionTrace trace;
  const auto ticks = static_cast<std::size_t>(std::llround(duration * cfg.control_rate));
  for (std::size_t k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) * cfg.tick();
    const auto tick = servo.step(request(t));
    trace.t.push_back(t);
    trace.command.push_back(tick.tension_command);
    trace.tension.push_back(tick.obs.tension);
  }
  return trace;
}

double settling_time(const std::vector<double>& t, const std::vector<double>& y, double target,
                     double band, double from, double until) {
  double entered = -1.0;
  for (std::size_t i = 0; i < t.size() && t[i] < until; ++i) {
    if (t[i] < from) continue;
    if (std::abs(y[i] - target) <= band) {
      if (entered < 0.0) entered = t[i];
    } else {
      entered = -1.0;
    }
  }
  return entered < 0.0 ? -1.0 : entered - from;
}

ControlSetup prepare_control(const ExperimentConfig& cfg) {
  ControlSetup setup;
  setup.subject = subject_params(cfg, 0);
  if (!cfg.tension_model_path.empty()) {
    setup.tension = controller::load_tension_model(cfg.tension_model_path);
  } else {
    setup.tension = run_tension_calibration(cfg).model;
  }
  if (!cfg.model_path.empty()) {
    setup.estimator = estimators::load_model(cfg.model_path);
  } else {
    const SubjectSession s = record_subject(cfg, 0);
    setup.estimator = train_estimator(
        cfg, cfg.control_estimator, s.train, s.scale,
        derive_seed(s.seed, 10 + static_cast<std::uint64_t>(cfg.control_estimator)));
  }
  return setup;
}

ControlLoop::ControlLoop(const ExperimentConfig& cfg, const ControlSetup& setup, std::uint64_t seed)
    : cfg_(cfg),
      setup_(setup),
      emg_(setup.subject, cfg.emg_rate, derive_seed(seed, 1)),
      features_(cfg.emg_rate, cfg.online_window, cfg.tick(), setup.estimator.scale()),
      stride_(static_cast<std::size_t>(std::llround(cfg.offline_hop / cfg.tick()))),
      context_(setup.estimator.context()),
      servo_(cfg, cfg.plant, derive_seed(seed, 2)) {
  if (!setup.estimator.trained()) throw std::invalid_argument("control loop needs a trained estimator");
  if (setup.tension.curve.empty()) throw std::invalid_argument("control loop needs a tension curve");
  stride_ = std::max<std::size_t>(stride_, 1);
  sequence_.resize(context_);
}

double ControlLoop::time() const { return static_cast<double>(tick_) * cfg_.tick(); }

ControlLoop::Tick ControlLoop::step(double activation, double target) {
  if (!(activation >= 0.0 && activation <= 1.0))
    throw std::invalid_argument("activation outside [0, 1]");
  Tick out;
  out.t = time();
  out.target = target;
  out.activation = activation;
  for (std::size_t i = 0, n = cfg_.emg_per_tick(); i < n; ++i) {
    if (auto f = features_.push(emg_.next(activation))) history_.push_back(*f);
  }
  // Sequence models see features spaced as in training.
  const std::size_t span = (context_ - 1) * stride_ + 1;
  while (history_.size() > span) history_.pop_front();
  if (history_.size() == span) {
    for (std::size_t j = 0; j < context_; ++j) sequence_[j] = history_[j * stride_];
    out.estimate = setup_.estimator.predict(sequence_);
  }
  const auto& cond = cfg_.control.conditioner;
  out.command = controller::condition_force(controller::scale_force_output(out.estimate, cond), cond);
  out.servo = servo_.step(setup_.tension.curve.force_to_tension(out.command));
  ++tick_;
  return out;
}

plant::ForcePattern control_pattern(const ExperimentConfig& cfg) {
  return plant::pattern_generate(cfg.control.conditioner.force_max, cfg.pattern_duration,
                                 cfg.pattern_hold, derive_seed(cfg.seed, 7001));
}

ControlResult run_prosthesis_control_experiment(
    const ExperimentConfig& cfg, const ControlSetup& setup, ActivationSource& source,
    const TickObserver& on_tick) {
  const auto pattern = control_pattern(cfg);
  ControlLoop loop(cfg, setup, derive_seed(cfg.seed, 7000));
  ControlResult result;
  const auto ticks = static_cast<std::size_t>(std::llround(pattern.duration() * cfg.control_rate));
  result.record.reserve(ticks);
  for (std::size_t k = 0; k < ticks; ++k) {
    const double t = loop.time();
    const double target = pattern.value_at(t);
    const auto tick = loop.step(source.next(t, target), target);
    auto& r = result.record;
    r.t.push_back(tick.t);
    r.target.push_back(tick.target);
    r.command.push_back(tick.command);
    r.applied.push_back(tick.servo.obs.force);
    r.tension_command.push_back(tick.servo.tension_command);
    r.tension.push_back(tick.servo.obs.tension);
    r.activation.push_back(tick.activation);
    r.position.push_back(tick.servo.obs.position);
    if (on_tick && !on_tick(tick)) {
      result.completed = k + 1 == ticks;
      break;
    }
  }
  if (auto* live = dynamic_cast<LiveSource*>(&source)) result.timeouts = live->timeouts();
  result.metrics = compute_metrics(result.record);
  return result;
}

json to_json(const ControlResult& r) {
  return {{"schema_version", kReportSchemaVersion},
          {"report", "prosthesis_control"},
          {"metrics", to_json(r.metrics)},
          {"completed", r.completed},
          {"input_timeouts", r.timeouts},
          {"input_timeout", r.timeouts > 0}};
}

}  // namespace emgfinger::harness
