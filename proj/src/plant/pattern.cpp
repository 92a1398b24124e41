#include "emgfinger/plant/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emgfinger/random.hpp"

namespace emgfinger::plant {

ForcePattern::ForcePattern(std::vector<PatternSegment> segments, double duration)
    : segments_(std::move(segments)), duration_(duration) {
  if (segments_.empty()) throw std::invalid_argument("force pattern: no segments");
  if (segments_.front().start != 0.0) throw std::invalid_argument("force pattern: must start at 0");
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (!(segments_[i].start > segments_[i - 1].start))
      throw std::invalid_argument("force pattern: segment starts must increase");
  }
  if (!(duration_ > segments_.back().start))
    throw std::invalid_argument("force pattern: duration ends before last segment");
}

double ForcePattern::value_at(double t) const {
  if (segments_.empty() || t < 0.0 || t >= duration_) return 0.0;
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const PatternSegment& s) { return v < s.start; });
  return std::prev(it)->level;
}

ForcePattern pattern_generate(double max_force, double duration, double hold, std::uint64_t seed) {
  if (!(max_force > 0.0)) throw std::invalid_argument("pattern: max_force must be positive");
  if (!(hold > 0.0) || !(duration >= hold)) throw std::invalid_argument("pattern: bad duration");
  Rng rng(derive_seed(seed, 0x9a));
  constexpr std::size_t kLevels = std::size(kPatternLevels);
  const auto count = static_cast<std::size_t>(std::ceil(duration / hold - 1e-9));
  std::vector<PatternSegment> segs;
  segs.reserve(count);
  std::size_t prev = kLevels;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t pick = rng.index(prev == kLevels ? kLevels : kLevels - 1);
    if (prev != kLevels && pick >= prev) ++pick;
    segs.push_back({static_cast<double>(i) * hold, kPatternLevels[pick] * max_force});
    prev = pick;
  }
  return ForcePattern(std::move(segs), duration);
}

}  // namespace emgfinger::plant
