#include "emgfinger/plant/subject.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace emgfinger::plant {

namespace {

constexpr double kBandLow = 20.0;
constexpr double kBandHigh = 200.0;
constexpr int kShapingOrder = 8;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_activation(double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("activation outside [0, 1]");
}

}  // namespace

void SubjectParams::validate() const {
  require(gamma > 0.0, "subject: gamma must be positive");
  require(force_max > 0.0, "subject: force_max must be positive");
  require(co_contraction >= 0.0, "subject: negative co-contraction");
  require(activation_exponent > 0.0, "subject: activation exponent must be positive");
  require(noise_floor >= 0.0 && emg_scale > 0.0, "subject: bad EMG amplitude law");
  require(interference >= 0.0 && line_frequency > 0.0, "subject: bad interference");
}

SubjectParams SubjectParams::sample(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5b));
  SubjectParams p;
  p.gamma = rng.uniform(1.8, 3.2);
  p.force_max = rng.uniform(7.0, 9.0);
  p.co_contraction = rng.uniform(0.25, 0.45);
  p.activation_exponent = rng.uniform(0.85, 0.95);
  p.noise_floor = rng.uniform(0.04, 0.06);
  p.emg_scale = rng.uniform(0.8, 1.2);
  p.interference = rng.uniform(0.005, 0.015);
  return p;
}

nlohmann::json to_json(const SubjectParams& p) {
  return {{"gamma", p.gamma},
          {"force_max_N", p.force_max},
          {"co_contraction", p.co_contraction},
          {"activation_exponent", p.activation_exponent},
          {"noise_floor", p.noise_floor},
          {"emg_scale", p.emg_scale},
          {"interference", p.interference},
          {"line_frequency_Hz", p.line_frequency}};
}

SubjectParams subject_params_from_json(const nlohmann::json& j) {
  SubjectParams p;
  auto get = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  get("gamma", p.gamma);
  get("force_max_N", p.force_max);
  get("co_contraction", p.co_contraction);
  get("activation_exponent", p.activation_exponent);
  get("noise_floor", p.noise_floor);
  get("emg_scale", p.emg_scale);
  get("interference", p.interference);
  get("line_frequency_Hz", p.line_frequency);
  p.validate();
  return p;
}

double subject_force(const SubjectParams& s, double a) {
  check_activation(a);
  return s.force_max * std::expm1(s.gamma * a) / std::expm1(s.gamma);
}

double activation_for_force(const SubjectParams& s, double force) {
  const double f = std::clamp(force / s.force_max, 0.0, 1.0);
  return std::clamp(std::log1p(f * std::expm1(s.gamma)) / s.gamma, 0.0, 1.0);
}

double emg_amplitude(const SubjectParams& s, double a) {
  check_activation(a);
  return s.noise_floor + s.emg_scale * std::pow(a, s.activation_exponent);
}

EmgGenerator::EmgGenerator(SubjectParams subject, double sample_rate, std::uint64_t seed)
    : subject_(subject),
      sample_rate_(sample_rate),
      rng_(derive_seed(seed, 0xe3)),
      shaping_(dsp::design_bandpass(sample_rate, kBandLow, kBandHigh, kShapingOrder)) {
  subject_.validate();
  // Unit output variance for unit white input: 1 / sqrt(sum h[n]^2).
  auto probe = dsp::design_bandpass(sample_rate, kBandLow, kBandHigh, kShapingOrder, 1);
  double energy = 0.0;
  const auto n = static_cast<std::size_t>(4.0 * sample_rate);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = probe.process_sample(0, i == 0 ? 1.0 : 0.0);
    energy += h * h;
  }
  noise_gain_ = 1.0 / std::sqrt(energy);
  for (auto& ph : phase_) ph = rng_.uniform(0.0, 2.0 * std::numbers::pi);
  // Let the shaping filter reach steady state before the first sample.
  const auto warmup = static_cast<std::size_t>(0.5 * sample_rate);
  for (std::size_t i = 0; i < warmup; ++i) {
    EmgFrame f;
    f.channels = {rng_.normal(), rng_.normal()};
    shaping_.process(f);
  }
}

EmgFrame EmgGenerator::next(double activation) {
  const double amp = emg_amplitude(subject_, activation);
  const double t = static_cast<double>(index_) / sample_rate_;
  EmgFrame white;
  white.t = t;
  white.channels = {rng_.normal(), rng_.normal()};
  EmgFrame out = shaping_.process(white);
  const std::array<double, kEmgChannels> scale{amp, subject_.co_contraction * amp};
  const double w = 2.0 * std::numbers::pi * subject_.line_frequency * t;
  for (std::size_t c = 0; c < kEmgChannels; ++c) {
    out.channels[c] = scale[c] * noise_gain_ * out.channels[c] +
                      subject_.interference * std::sin(w + phase_[c]);
  }
  out.t = t;
  ++index_;
  return out;
}

std::vector<EmgFrame> emg_generate(const SubjectParams& subject, std::span<const double> activation,
                                   double sample_rate, std::uint64_t seed) {
  EmgGenerator gen(subject, sample_rate, seed);
  std::vector<EmgFrame> frames;
  frames.reserve(activation.size());
  for (double a : activation) frames.push_back(gen.next(a));
  return frames;
}

ScriptedActivation::ScriptedActivation(SubjectParams subject, Params params, std::uint64_t seed)
    : subject_(subject), params_(params), rng_(derive_seed(seed, 0xac)) {
  subject_.validate();
  if (!(params_.lag > 0.0) || !(params_.jitter_tau > 0.0) || params_.jitter < 0.0)
    throw std::invalid_argument("scripted activation: bad parameters");
}

double ScriptedActivation::step(double target_force, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("scripted activation: dt must be positive");
  const double goal = activation_for_force(subject_, target_force);
  state_ += -std::expm1(-dt / params_.lag) * (goal - state_);
  const double decay = std::exp(-dt / params_.jitter_tau);
  jitter_ = decay * jitter_ + params_.jitter * std::sqrt(1.0 - decay * decay) * rng_.normal();
  output_ = std::clamp(state_ + jitter_, 0.0, 1.0);
  return output_;
}

}  // namespace emgfinger::plant
