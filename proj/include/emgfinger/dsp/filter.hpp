#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "emgfinger/types.hpp"

namespace emgfinger::dsp {

// Normalized second-order section:
//   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
  double b0 = 1.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;

  // Poles strictly inside the unit circle (Jury conditions for a quadratic).
  bool stable() const;
  std::complex<double> response(double frequency, double sample_rate) const;

  friend bool operator==(const Biquad&, const Biquad&) = default;
};

// Cascade of second-order sections with independent transposed direct-form II
// state per channel. State starts at zero; call reset() at a stream start.
class FilterChain {
 public:
  FilterChain(double sample_rate, std::vector<Biquad> sections,
              std::size_t channels = kEmgChannels);

  double sample_rate() const { return sample_rate_; }
  std::size_t channels() const { return channels_; }
  std::span<const Biquad> sections() const { return sections_; }

  // Filters one frame in place order: section 0 first. Throws
  // std::invalid_argument when the chain was not built for two channels.
  EmgFrame process(const EmgFrame& frame);

  double process_sample(std::size_t channel, double x);
  void process_block(std::size_t channel, std::span<double> samples);

  void reset();

  std::complex<double> response(double frequency) const;
  double gain_db(double frequency) const;

  // Sections of `next` run after this chain's sections. Sample rates must match.
  FilterChain then(const FilterChain& next) const;

  nlohmann::json to_json() const;
  static FilterChain from_json(const nlohmann::json& doc, std::size_t channels = kEmgChannels);

 private:
  double sample_rate_;
  std::vector<Biquad> sections_;
  std::size_t channels_;
  // Two delay elements per section per channel, laid out [channel][section][2].
  std::vector<double> state_;
};

// Butterworth bandpass of the given overall order (order/2 sections) via the
// bilinear transform with prewarped band edges. Unity gain at the centre
// frequency. Throws std::invalid_argument on an invalid band or odd order.
FilterChain design_bandpass(double sample_rate, double low, double high, int order,
                            std::size_t channels = kEmgChannels);

// One notch per multiple of `base` strictly below Nyquist.
FilterChain design_notch_bank(double sample_rate, double base, double quality,
                              std::size_t channels = kEmgChannels);

// Bandpass followed by the power-line notch bank.
FilterChain design_emg_chain(double sample_rate, double low = 20.0, double high = 200.0,
                             int order = 4, double notch_base = 50.0, double notch_q = 30.0,
                             std::size_t channels = kEmgChannels);

}  // namespace emgfinger::dsp
