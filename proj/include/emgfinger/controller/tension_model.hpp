#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

namespace emgfinger::controller {

struct CalibrationSample {
  double force = 0.0;     // fingertip force, N
  double position = 0.0;  // actuator position, mm
  double tension = 0.0;   // N
};

struct DegenerateSamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// T(F, p) = sum_{i <= deg_force, j <= deg_position} c_ij F^i p^j.
class TensionSurface2D {
 public:
  TensionSurface2D() = default;
  TensionSurface2D(int deg_force, int deg_position, std::vector<double> coefficients,
                   double residual_rmse = 0.0);

  double evaluate(double force, double position) const;
  // Coefficient of F^i p^j.
  double coefficient(int i, int j) const;

  int deg_force() const { return deg_force_; }
  int deg_position() const { return deg_position_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  double residual_rmse() const { return residual_rmse_; }

 private:
  int deg_force_ = 0;
  int deg_position_ = 0;
  std::vector<double> coefficients_{0.0};
  double residual_rmse_ = 0.0;
};

// Least-squares polynomial surface. Throws DegenerateSamplingError when either
// axis has fewer distinct values than its degree needs, or there are too few samples.
TensionSurface2D fit_surface(std::span<const CalibrationSample> samples, int deg_force = 3,
                             int deg_position = 2);

// Monotone, zero-anchored piecewise-linear force -> tension map.
class TensionCurve1D {
 public:
  TensionCurve1D() = default;
  // Knots must be strictly increasing and start at 0; values non-decreasing with value(0) = 0.
  TensionCurve1D(std::vector<double> force_knots, std::vector<double> tension_values);

  // Linear interpolation; beyond the last knot the last segment's slope
  // continues. Throws std::invalid_argument for negative force.
  double force_to_tension(double force) const;
  // Smallest force reaching `tension` (used to score the model against measured force).
  double tension_to_force(double tension) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  bool empty() const { return knots_.empty(); }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

// Pool-adjacent-violators: least-squares non-decreasing fit with unit weights.
std::vector<double> isotonic_fit(std::span<const double> values);

// Average the surface along `force_grid` over `positions`, subtract the value
// at F = 0, project onto non-decreasing sequences, clamp negatives to zero.
TensionCurve1D derive_curve_1d(const TensionSurface2D& surface, std::span<const double> positions,
                               std::span<const double> force_grid);

std::vector<double> uniform_grid(double start, double stop, std::size_t count);

struct TensionModel {
  TensionSurface2D surface;
  TensionCurve1D curve;
  nlohmann::json config = nlohmann::json::object();
};

nlohmann::json to_json(const TensionModel& model);
TensionModel tension_model_from_json(const nlohmann::json& doc);
void save_tension_model(const std::filesystem::path& path, const TensionModel& model);
TensionModel load_tension_model(const std::filesystem::path& path);

std::vector<CalibrationSample> read_calibration_csv(const std::filesystem::path& path);
void write_calibration_csv(const std::filesystem::path& path,
                           std::span<const CalibrationSample> samples);

}  // namespace emgfinger::controller
