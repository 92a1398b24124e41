#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "emgfinger/types.hpp"

namespace emgfinger::estimators {

// Time-ordered (features, normalized force) pairs from one trial of one subject.
struct Dataset {
  std::string subject;
  std::string trial;
  std::vector<FeatureVector> features;
  std::vector<double> force;  // fingertip force / subject maximum

  std::size_t size() const { return features.size(); }
  bool empty() const { return features.empty(); }
  void push_back(const FeatureVector& x, double y) {
    features.push_back(x);
    force.push_back(y);
  }
  // Throws std::invalid_argument on length mismatch, non-finite or negative
  // values, or timestamps that are not increasing.
  void validate() const;
};

// CSV `t,flexor_rms,extensor_rms,force_norm`.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace emgfinger::estimators
