#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "emgfinger/dsp/filter.hpp"
#include "emgfinger/dsp/rms.hpp"
#include "emgfinger/estimators/dataset.hpp"
#include "emgfinger/estimators/estimator.hpp"
#include "emgfinger/harness/config.hpp"
#include "emgfinger/plant/pattern.hpp"

namespace emgfinger::harness {

// Filter chain, sliding RMS and MVC normalization as one streaming stage.
class FeatureExtractor {
 public:
  FeatureExtractor(double sample_rate, double window_s, double hop_s,
                   dsp::NormalizationScale scale = {});

  // Returns a feature vector whenever the RMS window emits.
  std::optional<FeatureVector> push(const EmgFrame& frame);
  // Raw (unnormalized) RMS of the last emission.
  const dsp::ChannelRms& last_rms() const { return last_rms_; }
  void set_scale(const dsp::NormalizationScale& scale) { scale_ = scale; }
  void reset();

 private:
  dsp::FilterChain chain_;
  dsp::RmsWindow window_;
  dsp::NormalizationScale scale_;
  dsp::ChannelRms last_rms_{};
};

// MVC stage: rest, ramp to full activation, hold, rest. Returns the per-channel
// maximum RMS and the maximum measured fingertip force.
dsp::NormalizationScale run_mvc(const ExperimentConfig& cfg, const plant::SubjectParams& subject,
                                std::uint64_t seed);

// One offline trial: the subject tracks `pattern` (newtons of its own force)
// and the dataset pairs each RMS feature with the normalized measured force.
estimators::Dataset record_trial(const ExperimentConfig& cfg, const plant::SubjectParams& subject,
                                 const dsp::NormalizationScale& scale,
                                 const plant::ForcePattern& pattern, std::uint64_t seed);

struct SubjectSession {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  plant::SubjectParams params{};
  dsp::NormalizationScale scale{};
  estimators::Dataset train;
  estimators::Dataset test;
};

SubjectSession record_subject(const ExperimentConfig& cfg, std::size_t index);

estimators::Estimator train_estimator(const ExperimentConfig& cfg, estimators::EstimatorKind kind,
                                      const estimators::Dataset& train,
                                      const dsp::NormalizationScale& scale, std::uint64_t seed);

struct EstimatorScore {
  estimators::EstimatorKind kind{};
  double train_r2 = 0.0;
  double test_r2 = 0.0;
  double train_rmse = 0.0;  // normalized force units
  double test_rmse = 0.0;
};

// Scores are computed on samples i >= offset so every estimator is judged on
// the same targets, whatever its context length.
EstimatorScore score_estimator(const estimators::Estimator& estimator,
                               const estimators::Dataset& train, const estimators::Dataset& test,
                               std::size_t offset);

struct SubjectResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorScore> scores;
};

struct EstimatorSummary {
  estimators::EstimatorKind kind{};
  double mean_train_r2 = 0.0;
  double mean_test_r2 = 0.0;
  double std_test_r2 = 0.0;
  double mean_test_rmse = 0.0;
  double mean_drop = 0.0;  // train R2 - test R2
  std::vector<std::size_t> negative_r2_subjects;
};

struct ForceEstimationReport {
  std::vector<SubjectResult> subjects;
  std::vector<EstimatorSummary> summary;

  const EstimatorSummary& summary_for(estimators::EstimatorKind kind) const;
};

ForceEstimationReport run_force_estimation_experiment(const ExperimentConfig& cfg);

nlohmann::json to_json(const ForceEstimationReport& report);
// Per-subject, per-estimator rows:
// subject,estimator,train_r2,test_r2,train_rmse,test_rmse
void write_scores_csv(const std::filesystem::path& path, const ForceEstimationReport& report);

}  // namespace emgfinger::harness
