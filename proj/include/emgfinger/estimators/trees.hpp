#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "emgfinger/estimators/dataset.hpp"

namespace emgfinger::estimators {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;  // samples with x[feature] <= threshold
  int right = -1;
  double value = 0.0;
};

// CART regression tree on the two EMG features. Splits maximize variance
// reduction over every distinct feature value; on equal gain the earlier
// feature and the smaller threshold win.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  static RegressionTree constant(double value);
  static RegressionTree fit(std::span<const FeatureVector> x, std::span<const double> y,
                            std::span<const std::size_t> sample, int max_depth,
                            std::size_t min_samples_leaf = 1);

  double predict(const FeatureVector& x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

enum class EnsembleKind { RandomForest, GradientBoosting };

std::string_view to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(std::string_view name);

struct TreeParams {
  EnsembleKind kind = EnsembleKind::RandomForest;
  int bags = 10;
  int trees_per_bag = 20;
  int max_depth = 8;
  double learning_rate = 0.1;  // boosting only
  std::size_t min_samples_leaf = 1;

  static TreeParams random_forest();
  static TreeParams gradient_boosting();
};

// One bagging member: base + scale * sum(tree(x)). A forest bag averages its
// trees (base 0, scale 1/n); a boosted bag starts at the resample mean and
// adds shrunken residual trees.
struct TreeBag {
  double base = 0.0;
  double scale = 1.0;
  std::vector<RegressionTree> trees;

  double predict(const FeatureVector& x) const;
};

class BaggedTreeEnsemble {
 public:
  BaggedTreeEnsemble() = default;
  BaggedTreeEnsemble(TreeParams params, std::vector<TreeBag> bags);

  bool trained() const { return !bags_.empty(); }
  const TreeParams& params() const { return params_; }
  const std::vector<TreeBag>& bags() const { return bags_; }

  // Arithmetic mean of the bag predictions.
  double predict(const FeatureVector& x) const;

 private:
  TreeParams params_;
  std::vector<TreeBag> bags_;
};

// Every bag is trained on its own bootstrap resample (same size as the
// training set) drawn from `seed`.
BaggedTreeEnsemble fit_bagged_trees(const Dataset& train, const TreeParams& params,
                                    std::uint64_t seed);

}  // namespace emgfinger::estimators
