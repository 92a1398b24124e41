#include "emgfinger/dsp/filter.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace emgfinger::dsp {

bool Biquad::stable() const {
  // Roots of z^2 + a1 z + a2 lie inside the unit circle iff |a2| < 1 and |a1| < 1 + a2.
  return std::isfinite(b0) && std::isfinite(b1) && std::isfinite(b2) && std::isfinite(a1) &&
         std::isfinite(a2) && std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
}

std::complex<double> Biquad::response(double frequency, double sample_rate) const {
  const double w = 2.0 * std::numbers::pi * frequency / sample_rate;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

FilterChain::FilterChain(double sample_rate, std::vector<Biquad> sections, std::size_t channels)
    : sample_rate_(sample_rate), sections_(std::move(sections)), channels_(channels) {
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw std::invalid_argument("filter sample rate must be positive");
  }
  if (channels_ == 0) throw std::invalid_argument("filter needs at least one channel");
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    if (!sections_[i].stable()) {
      throw std::invalid_argument("unstable filter section " + std::to_string(i));
    }
  }
  state_.assign(channels_ * sections_.size() * 2, 0.0);
}

double FilterChain::process_sample(std::size_t channel, double x) {
  double* s = state_.data() + channel * sections_.size() * 2;
  for (const Biquad& q : sections_) {
    const double y = q.b0 * x + s[0];
    s[0] = q.b1 * x - q.a1 * y + s[1];
    s[1] = q.b2 * x - q.a2 * y;
    x = y;
    s += 2;
  }
  return x;
}

EmgFrame FilterChain::process(const EmgFrame& frame) {
  if (channels_ != kEmgChannels) {
    throw std::invalid_argument("frame has " + std::to_string(kEmgChannels) +
                                " channels but filter state has " + std::to_string(channels_));
  }
  EmgFrame out{frame.t, {}};
  for (std::size_t c = 0; c < kEmgChannels; ++c) out.channels[c] = process_sample(c, frame.channels[c]);
  return out;
}

void FilterChain::process_block(std::size_t channel, std::span<double> samples) {
  if (channel >= channels_) throw std::invalid_argument("channel index out of range");
  for (double& x : samples) x = process_sample(channel, x);
}

void FilterChain::reset() { std::fill(state_.begin(), state_.end(), 0.0); }

std::complex<double> FilterChain::response(double frequency) const {
  std::complex<double> h{1.0, 0.0};
  for (const Biquad& q : sections_) h *= q.response(frequency, sample_rate_);
  return h;
}

double FilterChain::gain_db(double frequency) const {
  return 20.0 * std::log10(std::abs(response(frequency)));
}

FilterChain FilterChain::then(const FilterChain& next) const {
  if (next.sample_rate_ != sample_rate_) {
    throw std::invalid_argument("cannot cascade filters with different sample rates");
  }
  std::vector<Biquad> all = sections_;
  all.insert(all.end(), next.sections_.begin(), next.sections_.end());
  return FilterChain(sample_rate_, std::move(all), channels_);
}

nlohmann::json FilterChain::to_json() const {
  nlohmann::json sections = nlohmann::json::array();
  for (const Biquad& q : sections_) {
    sections.push_back({{"b0", q.b0}, {"b1", q.b1}, {"b2", q.b2}, {"a1", q.a1}, {"a2", q.a2}});
  }
  return {{"sample_rate", sample_rate_}, {"sections", sections}};
}

FilterChain FilterChain::from_json(const nlohmann::json& doc, std::size_t channels) {
  std::vector<Biquad> sections;
  for (const auto& s : doc.at("sections")) {
    sections.push_back({s.at("b0").get<double>(), s.at("b1").get<double>(),
                        s.at("b2").get<double>(), s.at("a1").get<double>(),
                        s.at("a2").get<double>()});
  }
  return FilterChain(doc.at("sample_rate").get<double>(), std::move(sections), channels);
}

}  // namespace emgfinger::dsp
