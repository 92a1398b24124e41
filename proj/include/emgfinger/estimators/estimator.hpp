#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "emgfinger/dsp/rms.hpp"
#include "emgfinger/estimators/clstm.hpp"
#include "emgfinger/estimators/linear.hpp"
#include "emgfinger/estimators/trees.hpp"

namespace emgfinger::estimators {

enum class EstimatorKind { Linear, RandomForest, GradientBoosting, Clstm };

std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(std::string_view name);

inline constexpr int kModelFormatVersion = 1;

// A trained model together with the normalization it was trained under.
class Estimator {
 public:
  using Model = std::variant<LinearModel, BaggedTreeEnsemble, ClstmModel>;

  Estimator() = default;
  Estimator(Model model, dsp::NormalizationScale scale, std::uint64_t seed = 0,
            nlohmann::json hyperparameters = nlohmann::json::object());

  EstimatorKind kind() const;
  const Model& model() const { return model_; }
  const dsp::NormalizationScale& scale() const { return scale_; }
  std::uint64_t seed() const { return seed_; }
  const nlohmann::json& hyperparameters() const { return hyperparameters_; }
  bool trained() const;

  // Number of trailing feature vectors one prediction consumes.
  std::size_t context() const;

  // Predicts from the last context() entries of `history`.
  double predict(std::span<const FeatureVector> history) const;

  // One prediction per index i >= context() - 1, in order.
  std::vector<double> predict_series(std::span<const FeatureVector> features) const;

 private:
  Model model_;
  dsp::NormalizationScale scale_{};
  std::uint64_t seed_ = 0;
  nlohmann::json hyperparameters_ = nlohmann::json::object();
};

// Self-describing JSON model documents (kind, hyperparameters, weights or
// trees, normalization scale, seed, format version).
nlohmann::json to_json(const Estimator& estimator);
Estimator estimator_from_json(const nlohmann::json& doc);
void save_model(const std::filesystem::path& path, const Estimator& estimator);
Estimator load_model(const std::filesystem::path& path);

}  // namespace emgfinger::estimators
