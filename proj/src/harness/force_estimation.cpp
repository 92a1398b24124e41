#include "emgfinger/harness/force_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "emgfinger/estimators/metrics.hpp"
#include "emgfinger/plant/subject.hpp"

namespace emgfinger::harness {

using estimators::Dataset;
using estimators::Estimator;
using estimators::EstimatorKind;
using nlohmann::json;

FeatureExtractor::FeatureExtractor(double sample_rate, double window_s, double hop_s,
                                   dsp::NormalizationScale scale)
    : chain_(dsp::design_emg_chain(sample_rate)),
      window_(dsp::RmsWindow::from_seconds(window_s, hop_s, sample_rate)),
      scale_(scale) {}

std::optional<FeatureVector> FeatureExtractor::push(const EmgFrame& frame) {
  const auto rms = window_.update(chain_.process(frame));
  if (!rms) return std::nullopt;
  last_rms_ = *rms;
  return dsp::normalize(*rms, scale_, frame.t);
}

void FeatureExtractor::reset() {
  chain_.reset();
  window_.reset();
}

namespace {

double mvc_activation(double t, double duration) {
  const double u = t / duration;
  if (u < 1.0 / 6.0) return 0.0;
  if (u < 0.5) return std::min(1.0, (u - 1.0 / 6.0) * 3.0);
  if (u < 5.0 / 6.0) return 1.0;
  return 0.0;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

dsp::NormalizationScale run_mvc(const ExperimentConfig& cfg, const plant::SubjectParams& subject,
                                std::uint64_t seed) {
  plant::EmgGenerator gen(subject, cfg.emg_rate, derive_seed(seed, 1));
  Rng sensor(derive_seed(seed, 2));
  FeatureExtractor fx(cfg.emg_rate, cfg.offline_window, cfg.offline_hop);
  dsp::NormalizationScale scale;
  scale.rms_max = {0.0, 0.0};
  scale.force_max = 0.0;
  const std::size_t per_tick = cfg.emg_per_tick();
  const auto ticks = static_cast<std::size_t>(std::llround(cfg.mvc_duration * cfg.control_rate));
  for (std::size_t k = 0; k < ticks; ++k) {
    const double a = mvc_activation(static_cast<double>(k) * cfg.tick(), cfg.mvc_duration);
    const double force = std::max(
        0.0, plant::subject_force(subject, a) + cfg.force_sensor_noise * sensor.normal());
    scale.force_max = std::max(scale.force_max, force);
    for (std::size_t i = 0; i < per_tick; ++i) {
      if (fx.push(gen.next(a))) {
        for (std::size_t c = 0; c < kEmgChannels; ++c)
          scale.rms_max[c] = std::max(scale.rms_max[c], fx.last_rms()[c]);
      }
    }
  }
  if (!(scale.rms_max[0] > 0 && scale.rms_max[1] > 0 && scale.force_max > 0))
    throw std::runtime_error("MVC stage produced a zero maximum");
  return scale;
}

Dataset record_trial(const ExperimentConfig& cfg, const plant::SubjectParams& subject,
                     const dsp::NormalizationScale& scale, const plant::ForcePattern& pattern,
                     std::uint64_t seed) {
  plant::EmgGenerator gen(subject, cfg.emg_rate, derive_seed(seed, 1));
  Rng sensor(derive_seed(seed, 2));
  plant::ScriptedActivation human(subject, cfg.scripted, derive_seed(seed, 3));
  FeatureExtractor fx(cfg.emg_rate, cfg.offline_window, cfg.offline_hop, scale);
  Dataset data;
  const std::size_t per_tick = cfg.emg_per_tick();
  const auto ticks =
      static_cast<std::size_t>(std::llround(pattern.duration() * cfg.control_rate));
  for (std::size_t k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) * cfg.tick();
    const double a = human.step(pattern.value_at(t), cfg.tick());
    const double force = std::max(
        0.0, plant::subject_force(subject, a) + cfg.force_sensor_noise * sensor.normal());
    const double label = dsp::normalize_force(force, scale);
    for (std::size_t i = 0; i < per_tick; ++i) {
      if (auto f = fx.push(gen.next(a))) data.push_back(*f, label);
    }
  }
  data.validate();
  return data;
}

SubjectSession record_subject(const ExperimentConfig& cfg, std::size_t index) {
  SubjectSession s;
  s.index = index;
  s.seed = subject_seed(cfg, index);
  s.params = subject_params(cfg, index);
  s.scale = run_mvc(cfg, s.params, derive_seed(s.seed, 1));
  for (int trial = 0; trial < 2; ++trial) {
    const std::uint64_t tseed = derive_seed(s.seed, 2 + static_cast<std::uint64_t>(trial));
    const auto pattern = plant::pattern_generate(s.scale.force_max, cfg.pattern_duration,
                                                 cfg.pattern_hold, derive_seed(tseed, 0));
    Dataset d = record_trial(cfg, s.params, s.scale, pattern, tseed);
    d.subject = "subject" + std::to_string(index);
    d.trial = trial == 0 ? "train" : "test";
    (trial == 0 ? s.train : s.test) = std::move(d);
  }
  return s;
}

Estimator train_estimator(const ExperimentConfig& cfg, EstimatorKind kind, const Dataset& train,
                          const dsp::NormalizationScale& scale, std::uint64_t seed) {
  switch (kind) {
    case EstimatorKind::Linear:
      return Estimator(estimators::fit_linear(train), scale, seed);
    case EstimatorKind::RandomForest:
    case EstimatorKind::GradientBoosting: {
      const auto& p = kind == EstimatorKind::RandomForest ? cfg.random_forest : cfg.gradient_boosting;
      json hp = {{"bags", p.bags},
                 {"trees_per_bag", p.trees_per_bag},
                 {"max_depth", p.max_depth},
                 {"learning_rate", p.learning_rate}};
      auto params = p;
      params.kind = kind == EstimatorKind::RandomForest ? estimators::EnsembleKind::RandomForest
                                                        : estimators::EnsembleKind::GradientBoosting;
      return Estimator(estimators::fit_bagged_trees(train, params, seed), scale, seed, hp);
    }
    case EstimatorKind::Clstm: {
      auto tc = cfg.clstm;
      tc.seed = seed;
      estimators::TrainingLog log;
      auto model = estimators::train_clstm(train, tc, &log);
      json hp = {{"epochs", tc.epochs},
                 {"max_steps", tc.max_steps},
                 {"batch_size", tc.batch_size},
                 {"learning_rate", tc.learning_rate},
                 {"steps", log.steps},
                 {"initial_loss", log.initial_loss},
                 {"final_loss", log.final_loss}};
      return Estimator(std::move(model), scale, seed, hp);
    }
  }
  throw std::invalid_argument("unknown estimator kind");
}

EstimatorScore score_estimator(const Estimator& est, const Dataset& train, const Dataset& test,
                               std::size_t offset) {
  const std::size_t ctx = est.context();
  if (offset + 1 < ctx) throw std::invalid_argument("score offset shorter than estimator context");
  auto evaluate = [&](const Dataset& d, double& r2, double& err) {
    if (d.size() <= offset + 1) throw std::invalid_argument("dataset shorter than score offset");
    const auto pred = est.predict_series(d.features);
    // pred[j] corresponds to sample j + ctx - 1.
    std::vector<double> y(d.force.begin() + static_cast<std::ptrdiff_t>(offset), d.force.end());
    std::vector<double> p(pred.begin() + static_cast<std::ptrdiff_t>(offset + 1 - ctx), pred.end());
    r2 = estimators::r_squared(y, p);
    err = estimators::rmse(y, p);
  };
  EstimatorScore s;
  s.kind = est.kind();
  evaluate(train, s.train_r2, s.train_rmse);
  evaluate(test, s.test_r2, s.test_rmse);
  return s;
}

const EstimatorSummary& ForceEstimationReport::summary_for(EstimatorKind kind) const {
  for (const auto& s : summary)
    if (s.kind == kind) return s;
  throw std::out_of_range("no summary for estimator " + std::string(estimators::to_string(kind)));
}

ForceEstimationReport run_force_estimation_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ForceEstimationReport report;
  std::size_t offset = 0;
  for (auto kind : cfg.estimators) {
    if (kind == EstimatorKind::Clstm) offset = std::max(offset, cfg.clstm.shape.seq_len - 1);
  }
  for (std::size_t i = 0; i < cfg.subjects; ++i) {
    const SubjectSession s = record_subject(cfg, i);
    SubjectResult r{i, s.seed, {}};
    for (auto kind : cfg.estimators) {
      const auto est = train_estimator(cfg, kind, s.train, s.scale,
                                       derive_seed(s.seed, 10 + static_cast<std::uint64_t>(kind)));
      r.scores.push_back(score_estimator(est, s.train, s.test, offset));
    }
    report.subjects.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < cfg.estimators.size(); ++k) {
    EstimatorSummary sum;
    sum.kind = cfg.estimators[k];
    std::vector<double> train, test, err, drop;
    for (const auto& r : report.subjects) {
      const auto& sc = r.scores[k];
      train.push_back(sc.train_r2);
      test.push_back(sc.test_r2);
      err.push_back(sc.test_rmse);
      drop.push_back(sc.train_r2 - sc.test_r2);
      if (sc.test_r2 < 0.0) sum.negative_r2_subjects.push_back(r.index);
    }
    sum.mean_train_r2 = mean(train);
    sum.mean_test_r2 = mean(test);
    sum.mean_test_rmse = mean(err);
    sum.mean_drop = mean(drop);
    double var = 0.0;
    for (double x : test) var += (x - sum.mean_test_r2) * (x - sum.mean_test_r2);
    sum.std_test_r2 = test.size() > 1 ? std::sqrt(var / static_cast<double>(test.size() - 1)) : 0.0;
    report.summary.push_back(sum);
  }
  return report;
}

json to_json(const ForceEstimationReport& report) {
  json subjects = json::array();
  for (const auto& r : report.subjects) {
    json scores = json::object();
    for (const auto& s : r.scores) {
      scores[std::string(estimators::to_string(s.kind))] = {{"train_r2", s.train_r2},
                                                            {"test_r2", s.test_r2},
                                                            {"train_rmse", s.train_rmse},
                                                            {"test_rmse", s.test_rmse}};
    }
    subjects.push_back({{"subject", r.index}, {"seed", r.seed}, {"scores", scores}});
  }
  json summary = json::object();
  for (const auto& s : report.summary) {
    summary[std::string(estimators::to_string(s.kind))] = {
        {"mean_train_r2", s.mean_train_r2},
        {"mean_test_r2", s.mean_test_r2},
        {"std_test_r2", s.std_test_r2},
        {"mean_test_rmse", s.mean_test_rmse},
        {"mean_train_test_drop", s.mean_drop},
        {"negative_test_r2_subjects", s.negative_r2_subjects},
    };
  }
  return {{"schema_version", kReportSchemaVersion},
          {"report", "force_estimation"},
          {"subjects", subjects},
          {"summary", summary}};
}

void write_scores_csv(const std::filesystem::path& path, const ForceEstimationReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "subject,estimator,train_r2,test_r2,train_rmse,test_rmse\n" << std::setprecision(17);
  for (const auto& r : report.subjects) {
    for (const auto& s : r.scores) {
      out << r.index << ',' << estimators::to_string(s.kind) << ',' << s.train_r2 << ','
          << s.test_r2 << ',' << s.train_rmse << ',' << s.test_rmse << '\n';
    }
  }
}

}  // namespace emgfinger::harness
