#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "emgfinger/estimators/dataset.hpp"

namespace emgfinger::estimators {

// Temporal convolution (valid padding, ReLU) -> LSTM -> LSTM -> dense scalar.
struct ClstmShape {
  std::size_t filters = 64;
  std::size_t kernel = 3;
  std::size_t inputs = 2;
  std::size_t hidden1 = 50;
  std::size_t hidden2 = 30;
  std::size_t seq_len = 30;

  std::size_t conv_steps() const { return seq_len - kernel + 1; }
  friend bool operator==(const ClstmShape&, const ClstmShape&) = default;
};

// Offsets of each parameter block inside the flat parameter vector.
// LSTM gate rows are ordered input, forget, cell, output.
struct ClstmLayout {
  std::size_t conv_w, conv_b;      // filters x (kernel*inputs), filters
  std::size_t l1_w, l1_u, l1_b;    // 4h1 x filters, 4h1 x h1, 4h1
  std::size_t l2_w, l2_u, l2_b;    // 4h2 x h1, 4h2 x h2, 4h2
  std::size_t dense_w, dense_b;    // h2, 1
  std::size_t total;

  explicit ClstmLayout(const ClstmShape& s);
};

// Affine maps around the network: each input channel is standardized before
// the forward pass and the raw output is mapped back to force units.
struct ClstmScaling {
  std::array<double, 2> input_mean{0.0, 0.0};
  std::array<double, 2> input_std{1.0, 1.0};
  double output_mean = 0.0;
  double output_std = 1.0;

  friend bool operator==(const ClstmScaling&, const ClstmScaling&) = default;
};

class ClstmModel {
 public:
  ClstmModel() = default;
  // All weights zero.
  explicit ClstmModel(ClstmShape shape);
  // Glorot-uniform input kernels, orthogonal recurrent kernels, zero biases
  // except the forget gates (one).
  static ClstmModel initialized(ClstmShape shape, std::uint64_t seed);

  bool trained() const { return !params_.empty(); }
  const ClstmShape& shape() const { return shape_; }
  const ClstmLayout& layout() const { return layout_; }
  std::span<const double> params() const { return params_; }
  // Any mutable access invalidates forward caches taken before it.
  std::span<double> mutable_params();
  std::uint64_t version() const { return version_; }

  const ClstmScaling& scaling() const { return scaling_; }
  // Throws std::invalid_argument on non-positive standard deviations.
  void set_scaling(const ClstmScaling& scaling);

  // Sequence of exactly seq_len feature vectors, oldest first. Applies the
  // scaling on both sides of clstm_forward.
  double predict(std::span<const FeatureVector> sequence) const;

 private:
  ClstmShape shape_{};
  ClstmLayout layout_{ClstmShape{}};
  std::vector<double> params_;
  ClstmScaling scaling_{};
  std::uint64_t version_ = 0;
};

// Activations of one forward pass, everything backpropagation needs.
struct ClstmCache {
  std::vector<double> input;   // seq_len x inputs
  std::vector<double> conv_z;  // steps x filters, pre-activation
  std::vector<double> conv_y;  // steps x filters, after ReLU
  std::vector<double> gates1;  // steps x 4h1, post-activation
  std::vector<double> cell1;   // steps x h1
  std::vector<double> hidden1; // steps x h1
  std::vector<double> gates2;
  std::vector<double> cell2;
  std::vector<double> hidden2;
  double output = 0.0;
  const ClstmModel* model = nullptr;
  std::uint64_t model_version = 0;
};

// `sequence` is seq_len x inputs row-major. Throws std::invalid_argument when
// seq_len < kernel or the sequence length does not match the model.
double clstm_forward(const ClstmModel& model, std::span<const double> sequence, ClstmCache& cache);

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output). Throws
// std::logic_error when the cache does not come from the model's current weights.
void clstm_backward(const ClstmModel& model, const ClstmCache& cache, double dloss_doutput,
                    std::span<double> grad);

std::vector<double> flatten_sequence(std::span<const FeatureVector> sequence);
// Same, with each channel standardized by `scaling`.
std::vector<double> flatten_sequence(std::span<const FeatureVector> sequence,
                                     const ClstmScaling& scaling);

struct TrainConfig {
  int epochs = 1;
  int max_steps = 200;
  std::size_t batch_size = 32;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::uint64_t seed = 0;
  ClstmShape shape{};
};

struct TrainingLog {
  int steps = 0;
  double initial_loss = 0.0;  // MSE on a fixed probe subset, before the first step
  double final_loss = 0.0;    // same probe subset after the last step
  std::vector<double> batch_loss;
};

// Adam on mean squared error over sequences cut by sliding a seq_len window
// through the time-ordered training set; target is the force at the window's
// last sample.
ClstmModel train_clstm(const Dataset& train, const TrainConfig& config, TrainingLog* log = nullptr);

}  // namespace emgfinger::estimators
