#include "emgfinger/harness/record.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

#include "emgfinger/estimators/metrics.hpp"

namespace emgfinger::harness {

namespace {

constexpr const char* kHeader =
    "t,target_N,command_N,applied_N,tension_command_N,tension_N,activation,position_mm";

std::vector<std::vector<double>*> columns(TrialRecord& r) {
  return {&r.t, &r.target, &r.command, &r.applied, &r.tension_command, &r.tension, &r.activation,
          &r.position};
}

std::vector<const std::vector<double>*> columns(const TrialRecord& r) {
  return {&r.t, &r.target, &r.command, &r.applied, &r.tension_command, &r.tension, &r.activation,
          &r.position};
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void TrialRecord::reserve(std::size_t n) {
  for (auto* c : columns(*this)) c->reserve(n);
}

void TrialRecord::validate() const {
  for (const auto* c : columns(*this)) {
    if (c->size() != t.size()) throw std::invalid_argument("trial record: column lengths differ");
    for (double x : *c)
      if (!std::isfinite(x)) throw std::invalid_argument("trial record: non-finite value");
  }
  if (t.size() < 3) return;
  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw std::invalid_argument("trial record: timestamps not increasing");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-6 * dt + 1e-9)
      throw std::invalid_argument("trial record: non-uniform timestamps");
  }
}

void write_record_csv(std::ostream& out, const TrialRecord& r) {
  out << kHeader << '\n' << std::setprecision(17);
  const auto cols = columns(r);
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << (*cols[c])[i];
    out << '\n';
  }
}

void write_record_csv(const std::filesystem::path& path, const TrialRecord& record) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_record_csv(out, record);
}

TrialRecord read_record_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw std::invalid_argument("trial record: unexpected header");
  TrialRecord r;
  auto cols = columns(r);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= cols.size()) throw std::invalid_argument("trial record: too many fields on row " + std::to_string(row));
      cols[c++]->push_back(std::stod(cell));
    }
    if (c != cols.size()) throw std::invalid_argument("trial record: too few fields on row " + std::to_string(row));
  }
  r.validate();
  return r;
}

TrialRecord read_record_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_record_csv(in);
}

ControlMetrics compute_metrics(const TrialRecord& r) {
  if (r.empty()) throw std::invalid_argument("compute_metrics: empty record");
  r.validate();
  ControlMetrics m;
  m.tracking_rmse = estimators::rmse(r.applied, r.command);
  m.targeting_rmse = estimators::rmse(r.command, r.target);
  m.reaching_rmse = estimators::rmse(r.applied, r.target);
  m.tension_rmse = estimators::rmse(r.tension, r.tension_command);
  m.mean_target = mean(r.target);
  m.mean_applied = mean(r.applied);
  m.samples = r.size();
  m.duration = r.size() > 1 ? (r.t.back() - r.t.front()) * static_cast<double>(r.size()) /
                                  static_cast<double>(r.size() - 1)
                            : 0.0;
  return m;
}

nlohmann::json to_json(const ControlMetrics& m) {
  return {{"tracking_rmse_N", m.tracking_rmse},   {"targeting_rmse_N", m.targeting_rmse},
          {"reaching_rmse_N", m.reaching_rmse},   {"tension_rmse_N", m.tension_rmse},
          {"mean_target_N", m.mean_target},       {"mean_applied_N", m.mean_applied},
          {"duration_s", m.duration},             {"samples", m.samples}};
}

}  // namespace emgfinger::harness
