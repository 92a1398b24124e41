#include "emgfinger/dsp/rms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emgfinger/simd/kernels.hpp"

namespace emgfinger::dsp {

RmsWindow::RmsWindow(std::size_t length_samples, std::size_t hop_samples)
    : length_(length_samples), hop_(hop_samples) {
  if (length_ == 0 || hop_ == 0) throw std::invalid_argument("RMS window and hop must be non-empty");
  for (auto& b : buffer_) b.assign(length_, 0.0);
}

RmsWindow RmsWindow::from_seconds(double length_s, double hop_s, double sample_rate) {
  const auto length = static_cast<std::size_t>(std::llround(length_s * sample_rate));
  const auto hop = static_cast<std::size_t>(std::llround(hop_s * sample_rate));
  return RmsWindow(length, hop);
}

void RmsWindow::reset() {
  head_ = 0;
  seen_ = 0;
  for (auto& b : buffer_) std::fill(b.begin(), b.end(), 0.0);
}

double RmsWindow::channel_rms(std::size_t channel) const {
  // Recomputed from the buffer on each emission so there is no running-sum drift.
  const double ss = simd::sum_squares(buffer_[channel]);
  return std::sqrt(ss / static_cast<double>(length_));
}

std::optional<ChannelRms> RmsWindow::update(const EmgFrame& frame) {
  for (std::size_t c = 0; c < kEmgChannels; ++c) buffer_[c][head_] = frame.channels[c];
  head_ = (head_ + 1) % length_;
  ++seen_;
  if (seen_ < length_ || (seen_ - length_) % hop_ != 0) return std::nullopt;
  ChannelRms out{};
  for (std::size_t c = 0; c < kEmgChannels; ++c) out[c] = channel_rms(c);
  return out;
}

double rms(std::span<const double> samples) {
  if (samples.empty()) return 0.0;
  return std::sqrt(simd::sum_squares(samples) / static_cast<double>(samples.size()));
}

namespace {
double clip_normalized(double v) { return std::clamp(v, 0.0, kNormalizedCeiling); }
}  // namespace

FeatureVector normalize(const ChannelRms& rms, const NormalizationScale& scale, double t) {
  for (double m : scale.rms_max) {
    if (!(m > 0.0)) throw std::invalid_argument("normalization maxima must be positive");
  }
  return FeatureVector{clip_normalized(rms[kFlexor] / scale.rms_max[kFlexor]),
                       clip_normalized(rms[kExtensor] / scale.rms_max[kExtensor]), t};
}

double normalize_force(double force, const NormalizationScale& scale) {
  if (!(scale.force_max > 0.0)) throw std::invalid_argument("force maximum must be positive");
  return clip_normalized(force / scale.force_max);
}

}  // namespace emgfinger::dsp
