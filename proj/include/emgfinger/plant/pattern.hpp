#pragma once

#include <cstdint>
#include <vector>

namespace emgfinger::plant {

struct PatternSegment {
  double start = 0.0;  // s
  double level = 0.0;  // N
};

// Piecewise-constant force target.
class ForcePattern {
 public:
  ForcePattern() = default;
  ForcePattern(std::vector<PatternSegment> segments, double duration);

  double value_at(double t) const;
  double duration() const { return duration_; }
  const std::vector<PatternSegment>& segments() const { return segments_; }

 private:
  std::vector<PatternSegment> segments_;
  double duration_ = 0.0;
};

inline constexpr double kPatternLevels[] = {0.25, 0.50, 0.60};

// Holds of `hold` seconds at 25 %, 50 % or 60 % of max_force in seeded
// pseudo-random order, never repeating a level twice in a row.
ForcePattern pattern_generate(double max_force, double duration = 250.0, double hold = 5.0,
                              std::uint64_t seed = 0);

}  // namespace emgfinger::plant
