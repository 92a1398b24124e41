#include "emgfinger/estimators/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "emgfinger/random.hpp"

namespace emgfinger::estimators {
namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t left_count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const FeatureVector> x, std::span<const double> y, int max_depth,
              std::size_t min_leaf)
      : x_(x), y_(y), max_depth_(max_depth), min_leaf_(std::max<std::size_t>(min_leaf, 1)) {}

  std::vector<TreeNode> build(std::vector<std::size_t> sample) {
    grow(sample, 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t>& sample, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{});
    double sum = 0.0;
    for (std::size_t i : sample) sum += y_[i];
    nodes_[id].value = sum / static_cast<double>(sample.size());

    if (depth >= max_depth_ || sample.size() < 2 * min_leaf_) return id;
    const SplitChoice split = best_split(sample, sum);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    left.reserve(split.left_count);
    right.reserve(sample.size() - split.left_count);
    for (std::size_t i : sample) {
      (x_[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);
    }
    sample.clear();
    sample.shrink_to_fit();

    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  SplitChoice best_split(const std::vector<std::size_t>& sample, double total) const {
    const std::size_t n = sample.size();
    const double nd = static_cast<double>(n);
    const double base = total * total / nd;
    SplitChoice best;
    std::vector<std::size_t> order(sample);
    for (int f = 0; f < 2; ++f) {
      const auto fu = static_cast<std::size_t>(f);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double xa = x_[a][fu];
        const double xb = x_[b][fu];
        return xa < xb || (xa == xb && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += y_[order[k]];
        const double xk = x_[order[k]][fu];
        if (!(xk < x_[order[k + 1]][fu])) continue;
        const std::size_t nl = k + 1;
        if (nl < min_leaf_ || n - nl < min_leaf_) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(n - nl) - base;
        if (gain > best.gain) best = SplitChoice{f, xk, gain, nl};
      }
    }
    // Reject splits that only shuffle rounding noise.
    if (best.feature >= 0 && !(best.gain > 1e-14 * (1.0 + std::abs(base)))) best.feature = -1;
    return best;
  }

  std::span<const FeatureVector> x_;
  std::span<const double> y_;
  int max_depth_;
  std::size_t min_leaf_;
  std::vector<TreeNode> nodes_;
};

std::vector<std::size_t> bootstrap(Rng& rng, std::span<const std::size_t> from) {
  std::vector<std::size_t> out(from.size());
  for (auto& i : out) i = from[rng.index(from.size())];
  return out;
}

}  // namespace

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  const int n = static_cast<int>(nodes_.size());
  if (n == 0) throw std::invalid_argument("tree has no nodes");
  for (const TreeNode& node : nodes_) {
    if (node.feature < 0) continue;
    if (node.feature > 1 || node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n) {
      throw std::invalid_argument("tree node links are invalid");
    }
  }
}

RegressionTree RegressionTree::constant(double value) {
  return RegressionTree({TreeNode{-1, 0.0, -1, -1, value}});
}

RegressionTree RegressionTree::fit(std::span<const FeatureVector> x, std::span<const double> y,
                                   std::span<const std::size_t> sample, int max_depth,
                                   std::size_t min_samples_leaf) {
  if (sample.empty()) throw std::invalid_argument("tree fit on empty sample");
  if (x.size() != y.size()) throw std::invalid_argument("tree fit: length mismatch");
  TreeBuilder builder(x, y, max_depth, min_samples_leaf);
  return RegressionTree(builder.build({sample.begin(), sample.end()}));
}

double RegressionTree::predict(const FeatureVector& x) const {
  if (nodes_.empty()) throw std::logic_error("tree is not trained");
  int id = 0;
  while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
    const TreeNode& node = nodes_[static_cast<std::size_t>(id)];
    id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(id)].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::string_view to_string(EnsembleKind kind) {
  return kind == EnsembleKind::RandomForest ? "random_forest" : "gradient_boosting";
}

EnsembleKind ensemble_kind_from_string(std::string_view name) {
  if (name == "random_forest") return EnsembleKind::RandomForest;
  if (name == "gradient_boosting") return EnsembleKind::GradientBoosting;
  throw std::invalid_argument("unknown ensemble kind: " + std::string(name));
}

TreeParams TreeParams::random_forest() { return TreeParams{}; }

TreeParams TreeParams::gradient_boosting() {
  TreeParams p;
  p.kind = EnsembleKind::GradientBoosting;
  p.bags = 10;
  p.trees_per_bag = 25;
  p.max_depth = 3;
  p.learning_rate = 0.1;
  return p;
}

double TreeBag::predict(const FeatureVector& x) const {
  double sum = 0.0;
  for (const RegressionTree& t : trees) sum += t.predict(x);
  return base + scale * sum;
}

BaggedTreeEnsemble::BaggedTreeEnsemble(TreeParams params, std::vector<TreeBag> bags)
    : params_(params), bags_(std::move(bags)) {}

double BaggedTreeEnsemble::predict(const FeatureVector& x) const {
  if (bags_.empty()) throw std::logic_error("tree ensemble is not trained");
  double sum = 0.0;
  for (const TreeBag& bag : bags_) sum += bag.predict(x);
  return sum / static_cast<double>(bags_.size());
}

BaggedTreeEnsemble fit_bagged_trees(const Dataset& train, const TreeParams& params,
                                    std::uint64_t seed) {
  if (train.empty()) throw std::invalid_argument("cannot fit trees on an empty dataset");
  if (train.size() < 10) throw std::invalid_argument("tree ensembles need at least 10 samples");
  if (params.bags < 1 || params.trees_per_bag < 1 || params.max_depth < 0) {
    throw std::invalid_argument("invalid tree ensemble parameters");
  }
  const std::span<const FeatureVector> x = train.features;
  const std::span<const double> y = train.force;
  std::vector<std::size_t> all(train.size());
  std::iota(all.begin(), all.end(), std::size_t{0});

  Rng rng(seed);
  std::vector<TreeBag> bags;
  bags.reserve(static_cast<std::size_t>(params.bags));
  for (int b = 0; b < params.bags; ++b) {
    const std::vector<std::size_t> resample = bootstrap(rng, all);
    TreeBag bag;
    if (params.kind == EnsembleKind::RandomForest) {
      bag.base = 0.0;
      bag.scale = 1.0 / params.trees_per_bag;
      for (int t = 0; t < params.trees_per_bag; ++t) {
        const std::vector<std::size_t> inner = bootstrap(rng, resample);
        bag.trees.push_back(
            RegressionTree::fit(x, y, inner, params.max_depth, params.min_samples_leaf));
      }
    } else {
      // Boosting on squared loss: each tree fits the current residual on the resample.
      double mean = 0.0;
      for (std::size_t i : resample) mean += y[i];
      mean /= static_cast<double>(resample.size());
      bag.base = mean;
      bag.scale = params.learning_rate;
      std::vector<double> current(train.size(), mean);
      std::vector<double> residual(train.size(), 0.0);
      for (int t = 0; t < params.trees_per_bag; ++t) {
        for (std::size_t i = 0; i < train.size(); ++i) residual[i] = y[i] - current[i];
        RegressionTree tree =
            RegressionTree::fit(x, residual, resample, params.max_depth, params.min_samples_leaf);
        for (std::size_t i = 0; i < train.size(); ++i) {
          current[i] += params.learning_rate * tree.predict(x[i]);
        }
        bag.trees.push_back(std::move(tree));
      }
    }
    bags.push_back(std::move(bag));
  }
  return BaggedTreeEnsemble(params, std::move(bags));
}

}  // namespace emgfinger::estimators
