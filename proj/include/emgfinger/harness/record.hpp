#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <json.hpp>

namespace emgfinger::harness {

// Time-aligned control-loop log, one row per controller tick.
struct TrialRecord {
  std::vector<double> t;               // s
  std::vector<double> target;          // force pattern, N
  std::vector<double> command;         // conditioned force command, N
  std::vector<double> applied;         // fingertip force sensor, N
  std::vector<double> tension_command; // N
  std::vector<double> tension;         // load cell, N
  std::vector<double> activation;      // [0, 1]
  std::vector<double> position;        // actuator, mm

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
  void reserve(std::size_t n);
  // Throws std::invalid_argument on unequal lengths or non-uniform timestamps.
  void validate() const;
};

void write_record_csv(std::ostream& out, const TrialRecord& record);
void write_record_csv(const std::filesystem::path& path, const TrialRecord& record);
TrialRecord read_record_csv(std::istream& in);
TrialRecord read_record_csv(const std::filesystem::path& path);

struct ControlMetrics {
  double tracking_rmse = 0.0;   // command vs applied
  double targeting_rmse = 0.0;  // target vs command
  double reaching_rmse = 0.0;   // target vs applied
  double tension_rmse = 0.0;    // tension command vs load cell
  double mean_target = 0.0;
  double mean_applied = 0.0;
  double duration = 0.0;  // s
  std::size_t samples = 0;
};

// Pure; throws std::invalid_argument on an empty record.
ControlMetrics compute_metrics(const TrialRecord& record);
nlohmann::json to_json(const ControlMetrics& m);

}  // namespace emgfinger::harness
