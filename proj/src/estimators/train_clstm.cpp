#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "emgfinger/estimators/clstm.hpp"
#include "emgfinger/random.hpp"

namespace emgfinger::estimators {
namespace {

constexpr std::size_t kProbeSequences = 256;

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, const TrainConfig& c)
      : m_(n, 0.0), v_(n, 0.0), lr_(c.learning_rate), b1_(c.beta1), b2_(c.beta2), eps_(c.epsilon) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
};

double probe_loss(const ClstmModel& model, const std::vector<double>& flat, std::size_t width,
                  std::span<const double> targets, const std::vector<std::size_t>& probe,
                  ClstmCache& cache) {
  double ss = 0.0;
  for (std::size_t e : probe) {
    const std::span<const double> seq(flat.data() + e * 2 - width + 2, width);
    const double err = clstm_forward(model, seq, cache) - targets[e];
    ss += err * err;
  }
  return ss / static_cast<double>(probe.size());
}

double mean_std(std::span<const double> v, double& sd) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  sd = std::sqrt(ss / static_cast<double>(v.size()));
  if (!(sd > 1e-12)) sd = 1.0;
  return m;
}

ClstmScaling fit_scaling(const Dataset& train) {
  ClstmScaling s;
  std::vector<double> ch(train.size());
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < train.size(); ++i) ch[i] = train.features[i][c];
    s.input_mean[c] = mean_std(ch, s.input_std[c]);
  }
  s.output_mean = mean_std(train.force, s.output_std);
  return s;
}

}  // namespace

ClstmModel train_clstm(const Dataset& train, const TrainConfig& config, TrainingLog* log) {
  if (train.empty()) throw std::invalid_argument("cannot train the C-LSTM on an empty dataset");
  if (config.epochs < 1 || config.max_steps < 0 || config.batch_size == 0) {
    throw std::invalid_argument("invalid C-LSTM training configuration");
  }
  const ClstmShape& shape = config.shape;
  if (shape.inputs != 2) throw std::invalid_argument("C-LSTM training expects 2 input channels");
  const std::size_t len = shape.seq_len;
  if (train.size() < len) throw std::invalid_argument("dataset shorter than one sequence");
  const std::size_t sequences = train.size() - len + 1;
  if (sequences < config.batch_size) {
    throw std::invalid_argument("dataset too small to form one batch of sequences");
  }

  // The network is trained in standardized units on both sides.
  const ClstmScaling scaling = fit_scaling(train);
  // Window ending at sample e covers flat[(e - len + 1) * 2, (e + 1) * 2).
  const std::vector<double> flat = flatten_sequence(train.features, scaling);
  std::vector<double> targets(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    targets[i] = (train.force[i] - scaling.output_mean) / scaling.output_std;
  }
  const double loss_unit = scaling.output_std * scaling.output_std;
  const std::size_t width = len * 2;
  std::vector<std::size_t> ends(sequences);
  std::iota(ends.begin(), ends.end(), len - 1);

  Rng rng(derive_seed(config.seed, 1));
  ClstmModel model = ClstmModel::initialized(shape, derive_seed(config.seed, 0));
  model.set_scaling(scaling);

  std::vector<std::size_t> probe = ends;
  for (std::size_t i = probe.size(); i > 1; --i) std::swap(probe[i - 1], probe[rng.index(i)]);
  probe.resize(std::min(kProbeSequences, probe.size()));

  ClstmCache cache;
  TrainingLog local;
  local.initial_loss = loss_unit * probe_loss(model, flat, width, targets, probe, cache);

  const std::size_t per_epoch = sequences / config.batch_size;
  const std::size_t budget = std::min<std::size_t>(
      static_cast<std::size_t>(config.max_steps), per_epoch * static_cast<std::size_t>(config.epochs));

  AdamOptimizer adam(model.layout().total, config);
  std::vector<double> grad(model.layout().total, 0.0);
  std::vector<std::size_t> order = ends;
  std::size_t cursor = order.size();
  for (std::size_t step = 0; step < budget; ++step) {
    if (cursor + config.batch_size > order.size()) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
      cursor = 0;
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    double batch_ss = 0.0;
    const double scale = 2.0 / static_cast<double>(config.batch_size);
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const std::size_t e = order[cursor++];
      const std::span<const double> seq(flat.data() + e * 2 - width + 2, width);
      const double err = clstm_forward(model, seq, cache) - targets[e];
      batch_ss += err * err;
      clstm_backward(model, cache, scale * err, grad);
    }
    adam.step(model.mutable_params(), grad);
    local.batch_loss.push_back(loss_unit * batch_ss / static_cast<double>(config.batch_size));
    ++local.steps;
  }
  local.final_loss = loss_unit * probe_loss(model, flat, width, targets, probe, cache);
  if (log != nullptr) *log = std::move(local);
  return model;
}

}  // namespace emgfinger::estimators
