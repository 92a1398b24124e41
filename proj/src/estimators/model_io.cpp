#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>

#include "emgfinger/estimators/estimator.hpp"

namespace emgfinger::estimators {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Linear:
      return "linear";
    case EstimatorKind::RandomForest:
      return "random_forest";
    case EstimatorKind::GradientBoosting:
      return "gradient_boosting";
    case EstimatorKind::Clstm:
      return "clstm";
  }
  return "unknown";
}

EstimatorKind estimator_kind_from_string(std::string_view name) {
  if (name == "linear") return EstimatorKind::Linear;
  if (name == "random_forest") return EstimatorKind::RandomForest;
  if (name == "gradient_boosting") return EstimatorKind::GradientBoosting;
  if (name == "clstm") return EstimatorKind::Clstm;
  throw std::invalid_argument("unknown estimator kind: " + std::string(name));
}

Estimator::Estimator(Model model, dsp::NormalizationScale scale, std::uint64_t seed,
                     nlohmann::json hyperparameters)
    : model_(std::move(model)),
      scale_(scale),
      seed_(seed),
      hyperparameters_(std::move(hyperparameters)) {}

EstimatorKind Estimator::kind() const {
  if (std::holds_alternative<LinearModel>(model_)) return EstimatorKind::Linear;
  if (const auto* e = std::get_if<BaggedTreeEnsemble>(&model_)) {
    return e->params().kind == EnsembleKind::RandomForest ? EstimatorKind::RandomForest
                                                          : EstimatorKind::GradientBoosting;
  }
  return EstimatorKind::Clstm;
}

bool Estimator::trained() const {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          return m.fitted;
        } else {
          return m.trained();
        }
      },
      model_);
}

std::size_t Estimator::context() const {
  if (const auto* c = std::get_if<ClstmModel>(&model_)) return c->shape().seq_len;
  return 1;
}

double Estimator::predict(std::span<const FeatureVector> history) const {
  const std::size_t n = context();
  if (history.size() < n) {
    throw std::invalid_argument("estimator needs " + std::to_string(n) + " feature vectors");
  }
  const auto tail = history.subspan(history.size() - n);
  return std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ClstmModel>) {
          return m.predict(tail);
        } else {
          return m.predict(tail.back());
        }
      },
      model_);
}

std::vector<double> Estimator::predict_series(std::span<const FeatureVector> features) const {
  const std::size_t n = context();
  std::vector<double> out;
  if (features.size() < n) return out;
  out.reserve(features.size() - n + 1);
  for (std::size_t end = n; end <= features.size(); ++end) {
    out.push_back(predict(features.subspan(end - n, n)));
  }
  return out;
}

namespace {

nlohmann::json tree_to_json(const RegressionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : tree.nodes()) {
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  }
  return nodes;
}

RegressionTree tree_from_json(const nlohmann::json& doc) {
  std::vector<TreeNode> nodes;
  for (const auto& n : doc) {
    nodes.push_back(TreeNode{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                             n.at(3).get<int>(), n.at(4).get<double>()});
  }
  return RegressionTree(std::move(nodes));
}

nlohmann::json shape_to_json(const ClstmShape& s) {
  return {{"filters", s.filters}, {"kernel", s.kernel},   {"inputs", s.inputs},
          {"hidden1", s.hidden1}, {"hidden2", s.hidden2}, {"seq_len", s.seq_len}};
}

ClstmShape shape_from_json(const nlohmann::json& j) {
  ClstmShape s;
  s.filters = j.at("filters").get<std::size_t>();
  s.kernel = j.at("kernel").get<std::size_t>();
  s.inputs = j.at("inputs").get<std::size_t>();
  s.hidden1 = j.at("hidden1").get<std::size_t>();
  s.hidden2 = j.at("hidden2").get<std::size_t>();
  s.seq_len = j.at("seq_len").get<std::size_t>();
  return s;
}

}  // namespace

nlohmann::json to_json(const Estimator& estimator) {
  if (!estimator.trained()) throw std::logic_error("cannot serialize an untrained model");
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = std::string(to_string(estimator.kind()));
  doc["seed"] = estimator.seed();
  const auto& sc = estimator.scale();
  doc["normalization"] = {{"flexor_rms_max", sc.rms_max[kFlexor]},
                          {"extensor_rms_max", sc.rms_max[kExtensor]},
                          {"force_max_N", sc.force_max}};
  nlohmann::json hyper = estimator.hyperparameters();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          doc["weights"] = {{"flexor", m.w_flexor},
                            {"extensor", m.w_extensor},
                            {"intercept", m.intercept}};
        } else if constexpr (std::is_same_v<T, BaggedTreeEnsemble>) {
          const TreeParams& p = m.params();
          hyper["bags"] = p.bags;
          hyper["trees_per_bag"] = p.trees_per_bag;
          hyper["max_depth"] = p.max_depth;
          hyper["learning_rate"] = p.learning_rate;
          hyper["min_samples_leaf"] = p.min_samples_leaf;
          nlohmann::json bags = nlohmann::json::array();
          for (const TreeBag& bag : m.bags()) {
            nlohmann::json trees = nlohmann::json::array();
            for (const RegressionTree& t : bag.trees) trees.push_back(tree_to_json(t));
            bags.push_back({{"base", bag.base}, {"scale", bag.scale}, {"trees", trees}});
          }
          doc["bags"] = bags;
        } else {
          hyper["shape"] = shape_to_json(m.shape());
          const ClstmScaling& sc = m.scaling();
          doc["scaling"] = {{"input_mean", sc.input_mean},
                            {"input_std", sc.input_std},
                            {"output_mean", sc.output_mean},
                            {"output_std", sc.output_std}};
          doc["weights"] = std::vector<double>(m.params().begin(), m.params().end());
        }
      },
      estimator.model());
  doc["hyperparameters"] = hyper;
  return doc;
}

Estimator estimator_from_json(const nlohmann::json& doc) {
  const int version = doc.at("format_version").get<int>();
  if (version != kModelFormatVersion) {
    throw std::runtime_error("unsupported model format version " + std::to_string(version));
  }
  const EstimatorKind kind = estimator_kind_from_string(doc.at("kind").get<std::string>());
  const auto& norm = doc.at("normalization");
  dsp::NormalizationScale scale;
  scale.rms_max = {norm.at("flexor_rms_max").get<double>(),
                   norm.at("extensor_rms_max").get<double>()};
  scale.force_max = norm.at("force_max_N").get<double>();
  const auto seed = doc.at("seed").get<std::uint64_t>();
  const nlohmann::json& hyper = doc.at("hyperparameters");

  switch (kind) {
    case EstimatorKind::Linear: {
      const auto& w = doc.at("weights");
      LinearModel m{w.at("flexor").get<double>(), w.at("extensor").get<double>(),
                    w.at("intercept").get<double>(), true};
      return Estimator(m, scale, seed, hyper);
    }
    case EstimatorKind::RandomForest:
    case EstimatorKind::GradientBoosting: {
      TreeParams p;
      p.kind = kind == EstimatorKind::RandomForest ? EnsembleKind::RandomForest
                                                   : EnsembleKind::GradientBoosting;
      p.bags = hyper.at("bags").get<int>();
      p.trees_per_bag = hyper.at("trees_per_bag").get<int>();
      p.max_depth = hyper.at("max_depth").get<int>();
      p.learning_rate = hyper.at("learning_rate").get<double>();
      p.min_samples_leaf = hyper.at("min_samples_leaf").get<std::size_t>();
      std::vector<TreeBag> bags;
      for (const auto& b : doc.at("bags")) {
        TreeBag bag;
        bag.base = b.at("base").get<double>();
        bag.scale = b.at("scale").get<double>();
        for (const auto& t : b.at("trees")) bag.trees.push_back(tree_from_json(t));
        bags.push_back(std::move(bag));
      }
      return Estimator(BaggedTreeEnsemble(p, std::move(bags)), scale, seed, hyper);
    }
    case EstimatorKind::Clstm: {
      ClstmModel m(shape_from_json(hyper.at("shape")));
      const auto weights = doc.at("weights").get<std::vector<double>>();
      auto params = m.mutable_params();
      if (weights.size() != params.size()) {
        throw std::runtime_error("C-LSTM weight count does not match its shape");
      }
      std::copy(weights.begin(), weights.end(), params.begin());
      if (doc.contains("scaling")) {
        const auto& j = doc.at("scaling");
        ClstmScaling sc;
        sc.input_mean = j.at("input_mean").get<std::array<double, 2>>();
        sc.input_std = j.at("input_std").get<std::array<double, 2>>();
        sc.output_mean = j.at("output_mean").get<double>();
        sc.output_std = j.at("output_std").get<double>();
        m.set_scaling(sc);
      }
      return Estimator(std::move(m), scale, seed, hyper);
    }
  }
  throw std::logic_error("unreachable");
}

void save_model(const std::filesystem::path& path, const Estimator& estimator) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(estimator).dump(1) << '\n';
}

Estimator load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return estimator_from_json(nlohmann::json::parse(in));
}

}  // namespace emgfinger::estimators
