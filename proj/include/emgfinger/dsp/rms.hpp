#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "emgfinger/types.hpp"

namespace emgfinger::dsp {

using ChannelRms = std::array<double, kEmgChannels>;

// Sliding RMS over the trailing `length` samples, emitted every `hop` samples
// once the window has filled. Nothing is emitted during warm-up.
class RmsWindow {
 public:
  RmsWindow(std::size_t length_samples, std::size_t hop_samples);

  static RmsWindow from_seconds(double length_s, double hop_s, double sample_rate);

  std::optional<ChannelRms> update(const EmgFrame& frame);

  bool warmed_up() const { return seen_ >= length_; }
  std::size_t length() const { return length_; }
  std::size_t hop() const { return hop_; }
  void reset();

 private:
  double channel_rms(std::size_t channel) const;

  std::size_t length_;
  std::size_t hop_;
  std::size_t head_ = 0;
  std::size_t seen_ = 0;
  std::array<std::vector<double>, kEmgChannels> buffer_;
};

// sqrt(sum x^2 / N) over a whole block.
double rms(std::span<const double> samples);

struct NormalizationScale {
  std::array<double, kEmgChannels> rms_max{1.0, 1.0};
  double force_max = 1.0;  // newtons
};

inline constexpr double kNormalizedCeiling = 1.5;

// Divides each channel by its MVC maximum and clips to [0, 1.5].
FeatureVector normalize(const ChannelRms& rms, const NormalizationScale& scale, double t = 0.0);
double normalize_force(double force, const NormalizationScale& scale);

}  // namespace emgfinger::dsp
