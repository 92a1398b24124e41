#include "emgfinger/controller/tension_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace emgfinger::controller {

TensionSurface2D::TensionSurface2D(int deg_force, int deg_position,
                                   std::vector<double> coefficients, double residual_rmse)
    : deg_force_(deg_force),
      deg_position_(deg_position),
      coefficients_(std::move(coefficients)),
      residual_rmse_(residual_rmse) {
  if (deg_force_ < 0 || deg_position_ < 0) throw std::invalid_argument("negative surface degree");
  if (coefficients_.size() != static_cast<std::size_t>((deg_force_ + 1) * (deg_position_ + 1))) {
    throw std::invalid_argument("surface coefficient count does not match its degrees");
  }
  for (double c : coefficients_) {
    if (!std::isfinite(c)) throw std::invalid_argument("surface coefficients must be finite");
  }
}

double TensionSurface2D::coefficient(int i, int j) const {
  return coefficients_[static_cast<std::size_t>(i * (deg_position_ + 1) + j)];
}

double TensionSurface2D::evaluate(double force, double position) const {
  // Horner in F over polynomials in p.
  double acc = 0.0;
  for (int i = deg_force_; i >= 0; --i) {
    double inner = 0.0;
    for (int j = deg_position_; j >= 0; --j) inner = inner * position + coefficient(i, j);
    acc = acc * force + inner;
  }
  return acc;
}

TensionSurface2D fit_surface(std::span<const CalibrationSample> samples, int deg_force,
                             int deg_position) {
  if (deg_force < 0 || deg_position < 0) throw std::invalid_argument("negative surface degree");
  const int terms = (deg_force + 1) * (deg_position + 1);
  if (samples.size() < static_cast<std::size_t>(terms)) {
    throw DegenerateSamplingError("too few calibration samples for the surface degree");
  }
  std::set<double> forces;
  std::set<double> positions;
  double f_scale = 0.0;
  double p_scale = 0.0;
  for (const auto& s : samples) {
    forces.insert(s.force);
    positions.insert(s.position);
    f_scale = std::max(f_scale, std::abs(s.force));
    p_scale = std::max(p_scale, std::abs(s.position));
  }
  if (forces.size() < static_cast<std::size_t>(deg_force + 1) ||
      positions.size() < static_cast<std::size_t>(deg_position + 1)) {
    throw DegenerateSamplingError("calibration samples do not span both axes");
  }
  if (f_scale == 0.0) f_scale = 1.0;
  if (p_scale == 0.0) p_scale = 1.0;

  // Fit on scaled axes for conditioning, then map coefficients back.
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd design(n, terms);
  Eigen::VectorXd target(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& s = samples[static_cast<std::size_t>(r)];
    const double f = s.force / f_scale;
    const double p = s.position / p_scale;
    double fi = 1.0;
    for (int i = 0; i <= deg_force; ++i) {
      double pj = 1.0;
      for (int j = 0; j <= deg_position; ++j) {
        design(r, i * (deg_position + 1) + j) = fi * pj;
        pj *= p;
      }
      fi *= f;
    }
    target(r) = s.tension;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < terms) throw DegenerateSamplingError("calibration design matrix is rank deficient");
  const Eigen::VectorXd c = qr.solve(target);
  const Eigen::VectorXd residual = design * c - target;
  const double rmse = std::sqrt(residual.squaredNorm() / static_cast<double>(n));

  std::vector<double> coefficients(static_cast<std::size_t>(terms));
  for (int i = 0; i <= deg_force; ++i) {
    for (int j = 0; j <= deg_position; ++j) {
      const int k = i * (deg_position + 1) + j;
      coefficients[static_cast<std::size_t>(k)] = c(k) / (std::pow(f_scale, i) * std::pow(p_scale, j));
    }
  }
  return TensionSurface2D(deg_force, deg_position, std::move(coefficients), rmse);
}

TensionCurve1D::TensionCurve1D(std::vector<double> force_knots, std::vector<double> tension_values)
    : knots_(std::move(force_knots)), values_(std::move(tension_values)) {
  if (knots_.size() < 2 || knots_.size() != values_.size()) {
    throw std::invalid_argument("tension curve needs at least two knots with one value each");
  }
  if (knots_.front() != 0.0 || values_.front() != 0.0) {
    throw std::invalid_argument("tension curve must pass through (0, 0)");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw std::invalid_argument("tension knots must increase");
    if (!(values_[i] >= values_[i - 1]) || !std::isfinite(values_[i])) {
      throw std::invalid_argument("tension curve must be non-decreasing");
    }
  }
}

double TensionCurve1D::force_to_tension(double force) const {
  if (knots_.empty()) throw std::logic_error("tension curve is empty");
  if (!(force >= 0.0)) throw std::invalid_argument("force must be non-negative");
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), force);
  std::size_t hi = static_cast<std::size_t>(it - knots_.begin());
  hi = std::clamp<std::size_t>(hi, 1, knots_.size() - 1);
  const std::size_t lo = hi - 1;
  const double slope = (values_[hi] - values_[lo]) / (knots_[hi] - knots_[lo]);
  return values_[lo] + slope * (force - knots_[lo]);
}

double TensionCurve1D::tension_to_force(double tension) const {
  if (knots_.empty()) throw std::logic_error("tension curve is empty");
  if (tension <= 0.0) return 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (values_[i] >= tension) {
      const double span = values_[i] - values_[i - 1];
      if (span <= 0.0) return knots_[i - 1];
      return knots_[i - 1] + (tension - values_[i - 1]) / span * (knots_[i] - knots_[i - 1]);
    }
  }
  const std::size_t hi = knots_.size() - 1;
  const double span = values_[hi] - values_[hi - 1];
  if (span <= 0.0) return knots_[hi];
  return knots_[hi] + (tension - values_[hi]) / span * (knots_[hi] - knots_[hi - 1]);
}

std::vector<double> isotonic_fit(std::span<const double> values) {
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      const Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().count += top.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const Block& b : blocks) out.insert(out.end(), b.count, b.mean());
  return out;
}

TensionCurve1D derive_curve_1d(const TensionSurface2D& surface, std::span<const double> positions,
                               std::span<const double> force_grid) {
  if (positions.empty() || force_grid.size() < 2) {
    throw std::invalid_argument("curve derivation needs positions and at least two grid forces");
  }
  if (force_grid.front() != 0.0) throw std::invalid_argument("force grid must start at 0 N");
  std::vector<double> mean(force_grid.size(), 0.0);
  for (std::size_t i = 0; i < force_grid.size(); ++i) {
    for (double p : positions) mean[i] += surface.evaluate(force_grid[i], p);
    mean[i] /= static_cast<double>(positions.size());
  }
  const double anchor = mean.front();
  for (double& v : mean) v -= anchor;
  std::vector<double> mono = isotonic_fit(mean);
  for (double& v : mono) v = std::max(v, 0.0);
  mono.front() = 0.0;
  return TensionCurve1D({force_grid.begin(), force_grid.end()}, std::move(mono));
}

std::vector<double> uniform_grid(double start, double stop, std::size_t count) {
  if (count < 2) throw std::invalid_argument("grid needs at least two points");
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  g.back() = stop;
  return g;
}

nlohmann::json to_json(const TensionModel& model) {
  return {{"format_version", 1},
          {"surface",
           {{"deg_force", model.surface.deg_force()},
            {"deg_position", model.surface.deg_position()},
            {"coefficients", model.surface.coefficients()},
            {"residual_rmse_N", model.surface.residual_rmse()}}},
          {"curve", {{"force_N", model.curve.knots()}, {"tension_N", model.curve.values()}}},
          {"config", model.config}};
}

TensionModel tension_model_from_json(const nlohmann::json& doc) {
  if (doc.at("format_version").get<int>() != 1) {
    throw std::runtime_error("unsupported tension model format version");
  }
  const auto& s = doc.at("surface");
  TensionModel m;
  m.surface = TensionSurface2D(s.at("deg_force").get<int>(), s.at("deg_position").get<int>(),
                               s.at("coefficients").get<std::vector<double>>(),
                               s.at("residual_rmse_N").get<double>());
  const auto& c = doc.at("curve");
  m.curve = TensionCurve1D(c.at("force_N").get<std::vector<double>>(),
                           c.at("tension_N").get<std::vector<double>>());
  if (doc.contains("config")) m.config = doc.at("config");
  return m;
}

void save_tension_model(const std::filesystem::path& path, const TensionModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(model).dump(1) << '\n';
}

TensionModel load_tension_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return tension_model_from_json(nlohmann::json::parse(in));
}

std::vector<CalibrationSample> read_calibration_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "force_N,position_mm,tension_N") {
    throw std::runtime_error("calibration CSV must start with 'force_N,position_mm,tension_N'");
  }
  std::vector<CalibrationSample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    CalibrationSample s;
    char c1 = 0, c2 = 0;
    if (!(row >> s.force >> c1 >> s.position >> c2 >> s.tension) || c1 != ',' || c2 != ',') {
      throw std::runtime_error("malformed calibration CSV row at line " + std::to_string(lineno));
    }
    out.push_back(s);
  }
  return out;
}

void write_calibration_csv(const std::filesystem::path& path,
                           std::span<const CalibrationSample> samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "force_N,position_mm,tension_N\n" << std::setprecision(17);
  for (const auto& s : samples) out << s.force << ',' << s.position << ',' << s.tension << '\n';
}

}  // namespace emgfinger::controller
