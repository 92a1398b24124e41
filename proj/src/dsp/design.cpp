#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "emgfinger/dsp/filter.hpp"

namespace emgfinger::dsp {
namespace {

using cd = std::complex<double>;

Biquad section_from_poles(cd p0, cd p1, double b0, double b1, double b2) {
  // (1 - p0 z^-1)(1 - p1 z^-1) with p0, p1 a conjugate or a real pair.
  return Biquad{b0, b1, b2, -(p0 + p1).real(), (p0 * p1).real()};
}

}  // namespace

FilterChain design_bandpass(double sample_rate, double low, double high, int order,
                            std::size_t channels) {
  const double nyquist = sample_rate / 2.0;
  if (!(low > 0.0) || !(high < nyquist) || !(low < high)) {
    throw std::invalid_argument("invalid band: need 0 < low < high < sample_rate/2");
  }
  if (order <= 0 || order % 2 != 0) {
    throw std::invalid_argument("bandpass order must be a positive even number");
  }
  const int n = order / 2;
  const double fs2 = 2.0 * sample_rate;
  const double wl = fs2 * std::tan(std::numbers::pi * low / sample_rate);
  const double wh = fs2 * std::tan(std::numbers::pi * high / sample_rate);
  const double w0sq = wl * wh;
  const double bw = wh - wl;

  std::vector<cd> upper;
  std::vector<double> real;
  for (int k = 1; k <= n; ++k) {
    const cd proto = std::polar(1.0, std::numbers::pi * (2.0 * k + n - 1) / (2.0 * n));
    const cd half = proto * bw / 2.0;
    const cd disc = std::sqrt(half * half - w0sq);
    for (const cd s : {half + disc, half - disc}) {
      const cd z = (fs2 + s) / (fs2 - s);
      if (std::abs(z.imag()) > 1e-12) {
        if (z.imag() > 0.0) upper.push_back(z);
      } else {
        real.push_back(z.real());
      }
    }
  }
  std::sort(real.begin(), real.end());
  if (real.size() % 2 != 0 || upper.size() + real.size() / 2 != static_cast<std::size_t>(n)) {
    throw std::logic_error("bandpass pole pairing failed");
  }

  // Every section gets one zero at DC and one at Nyquist.
  std::vector<Biquad> sections;
  for (const cd& z : upper) sections.push_back(section_from_poles(z, std::conj(z), 1.0, 0.0, -1.0));
  for (std::size_t i = 0; i < real.size(); i += 2) {
    sections.push_back(section_from_poles(real[i], real[i + 1], 1.0, 0.0, -1.0));
  }

  // The analog prototype has unit gain at w0; its digital image sits at the
  // unwarped centre frequency.
  const double centre = sample_rate / std::numbers::pi * std::atan(std::sqrt(w0sq) / fs2);
  FilterChain raw(sample_rate, sections, channels);
  const double g = std::pow(1.0 / std::abs(raw.response(centre)), 1.0 / n);
  for (Biquad& q : sections) {
    q.b0 *= g;
    q.b1 *= g;
    q.b2 *= g;
  }
  return FilterChain(sample_rate, std::move(sections), channels);
}

FilterChain design_notch_bank(double sample_rate, double base, double quality,
                              std::size_t channels) {
  const double nyquist = sample_rate / 2.0;
  if (!(base > 0.0) || !(base < nyquist) || !std::isfinite(base)) {
    throw std::invalid_argument("invalid notch base frequency");
  }
  if (!(quality > 0.0)) throw std::invalid_argument("notch quality must be positive");
  std::vector<Biquad> sections;
  for (int k = 1; k * base < nyquist; ++k) {
    const double w0 = 2.0 * std::numbers::pi * k * base / sample_rate;
    const double alpha = std::sin(w0) / (2.0 * quality);
    const double norm = 1.0 + alpha;
    const double c = -2.0 * std::cos(w0) / norm;
    sections.push_back(Biquad{1.0 / norm, c, 1.0 / norm, c, (1.0 - alpha) / norm});
  }
  return FilterChain(sample_rate, std::move(sections), channels);
}

FilterChain design_emg_chain(double sample_rate, double low, double high, int order,
                             double notch_base, double notch_q, std::size_t channels) {
  return design_bandpass(sample_rate, low, high, order, channels)
      .then(design_notch_bank(sample_rate, notch_base, notch_q, channels));
}

}  // namespace emgfinger::dsp
