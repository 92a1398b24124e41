#pragma once

#include <array>
#include <cstddef>

namespace emgfinger {

inline constexpr std::size_t kEmgChannels = 2;
inline constexpr std::size_t kFlexor = 0;
inline constexpr std::size_t kExtensor = 1;

// One multichannel EMG sample. Channel 0 is the flexor, channel 1 the extensor.
struct EmgFrame {
  double t = 0.0;
  std::array<double, kEmgChannels> channels{};
};

// Per-window RMS features after MVC normalization.
struct FeatureVector {
  double flexor = 0.0;
  double extensor = 0.0;
  double t = 0.0;

  double operator[](std::size_t i) const { return i == 0 ? flexor : extensor; }
};

}  // namespace emgfinger
