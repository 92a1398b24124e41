#include "emgfinger/estimators/clstm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "emgfinger/random.hpp"
#include "emgfinger/simd/kernels.hpp"

namespace emgfinger::estimators {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct LstmWeights {
  const double* w;  // 4h x d
  const double* u;  // 4h x h
  const double* b;  // 4h
  std::size_t d;
  std::size_t h;
};

struct LstmGrads {
  double* w;
  double* u;
  double* b;
};

// Runs one LSTM layer over `steps` inputs (steps x d) and fills gates/cell/hidden.
void lstm_forward(const LstmWeights& p, const double* x, std::size_t steps, double* gates,
                  double* cell, double* hidden) {
  const auto& k = simd::kernels();
  const std::size_t h = p.h;
  for (std::size_t t = 0; t < steps; ++t) {
    double* a = gates + t * 4 * h;
    std::copy(p.b, p.b + 4 * h, a);
    k.gemv(p.w, 4 * h, p.d, x + t * p.d, a);
    if (t > 0) k.gemv(p.u, 4 * h, h, hidden + (t - 1) * h, a);
    double* c = cell + t * h;
    double* hs = hidden + t * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double i = sigmoid(a[j]);
      const double f = sigmoid(a[h + j]);
      const double g = std::tanh(a[2 * h + j]);
      const double o = sigmoid(a[3 * h + j]);
      a[j] = i;
      a[h + j] = f;
      a[2 * h + j] = g;
      a[3 * h + j] = o;
      const double prev = t > 0 ? cell[(t - 1) * h + j] : 0.0;
      c[j] = f * prev + i * g;
      hs[j] = o * std::tanh(c[j]);
    }
  }
}

// Full backpropagation through time. `dh_out` (steps x h) is the loss
// gradient arriving at each hidden output from above; `dx` (steps x d) receives
// the gradient with respect to the layer input and may be null.
void lstm_backward(const LstmWeights& p, const LstmGrads& g, const double* x, std::size_t steps,
                   const double* gates, const double* cell, const double* hidden,
                   const double* dh_out, double* dx) {
  const auto& k = simd::kernels();
  const std::size_t h = p.h;
  std::vector<double> dh_next(h, 0.0);
  std::vector<double> dc_next(h, 0.0);
  std::vector<double> da(4 * h, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    const double* gt = gates + t * 4 * h;
    const double* c = cell + t * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double i = gt[j];
      const double f = gt[h + j];
      const double gg = gt[2 * h + j];
      const double o = gt[3 * h + j];
      const double tc = std::tanh(c[j]);
      const double dh = dh_out[t * h + j] + dh_next[j];
      const double dout = dh * tc;
      const double dc = dc_next[j] + dh * o * (1.0 - tc * tc);
      const double prev = t > 0 ? cell[(t - 1) * h + j] : 0.0;
      da[j] = dc * gg * i * (1.0 - i);
      da[h + j] = dc * prev * f * (1.0 - f);
      da[2 * h + j] = dc * i * (1.0 - gg * gg);
      da[3 * h + j] = dout * o * (1.0 - o);
      dc_next[j] = dc * f;
    }
    for (std::size_t r = 0; r < 4 * h; ++r) g.b[r] += da[r];
    k.ger(1.0, da.data(), 4 * h, x + t * p.d, p.d, g.w);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    if (t > 0) {
      k.ger(1.0, da.data(), 4 * h, hidden + (t - 1) * h, h, g.u);
      k.gemv_t(p.u, 4 * h, h, da.data(), dh_next.data());
    }
    if (dx != nullptr) k.gemv_t(p.w, 4 * h, p.d, da.data(), dx + t * p.d);
  }
}

void glorot_uniform(Rng& rng, double* w, std::size_t count, std::size_t fan_in,
                    std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < count; ++i) w[i] = rng.uniform(-limit, limit);
}

// Rows x cols block with orthonormal columns (rows >= cols), row-major.
void orthogonal(Rng& rng, double* w, std::size_t rows, std::size_t cols) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  for (Eigen::Index r2 = 0; r2 < a.rows(); ++r2) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) w[r2 * a.cols() + c] = q(r2, c);
  }
}

}  // namespace

ClstmLayout::ClstmLayout(const ClstmShape& s) {
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    const std::size_t here = at;
    at += n;
    return here;
  };
  conv_w = take(s.filters * s.kernel * s.inputs);
  conv_b = take(s.filters);
  l1_w = take(4 * s.hidden1 * s.filters);
  l1_u = take(4 * s.hidden1 * s.hidden1);
  l1_b = take(4 * s.hidden1);
  l2_w = take(4 * s.hidden2 * s.hidden1);
  l2_u = take(4 * s.hidden2 * s.hidden2);
  l2_b = take(4 * s.hidden2);
  dense_w = take(s.hidden2);
  dense_b = take(1);
  total = at;
}

ClstmModel::ClstmModel(ClstmShape shape) : shape_(shape), layout_(shape) {
  if (shape.filters == 0 || shape.kernel == 0 || shape.inputs == 0 || shape.hidden1 == 0 ||
      shape.hidden2 == 0) {
    throw std::invalid_argument("C-LSTM dimensions must be positive");
  }
  if (shape.seq_len < shape.kernel) {
    throw std::invalid_argument("C-LSTM sequence length must be at least the kernel size");
  }
  params_.assign(layout_.total, 0.0);
}

ClstmModel ClstmModel::initialized(ClstmShape shape, std::uint64_t seed) {
  ClstmModel m(shape);
  Rng rng(seed);
  const ClstmLayout& l = m.layout_;
  double* p = m.params_.data();
  const std::size_t kc = shape.kernel * shape.inputs;
  glorot_uniform(rng, p + l.conv_w, shape.filters * kc, kc, shape.kernel * shape.filters);
  glorot_uniform(rng, p + l.l1_w, 4 * shape.hidden1 * shape.filters, shape.filters,
                 4 * shape.hidden1);
  orthogonal(rng, p + l.l1_u, 4 * shape.hidden1, shape.hidden1);
  glorot_uniform(rng, p + l.l2_w, 4 * shape.hidden2 * shape.hidden1, shape.hidden1,
                 4 * shape.hidden2);
  orthogonal(rng, p + l.l2_u, 4 * shape.hidden2, shape.hidden2);
  glorot_uniform(rng, p + l.dense_w, shape.hidden2, shape.hidden2, 1);
  std::fill_n(p + l.l1_b + shape.hidden1, shape.hidden1, 1.0);
  std::fill_n(p + l.l2_b + shape.hidden2, shape.hidden2, 1.0);
  return m;
}

std::span<double> ClstmModel::mutable_params() {
  ++version_;
  return params_;
}

std::vector<double> flatten_sequence(std::span<const FeatureVector> sequence) {
  std::vector<double> out;
  out.reserve(sequence.size() * 2);
  for (const FeatureVector& f : sequence) {
    out.push_back(f.flexor);
    out.push_back(f.extensor);
  }
  return out;
}

std::vector<double> flatten_sequence(std::span<const FeatureVector> sequence,
                                     const ClstmScaling& scaling) {
  std::vector<double> out;
  out.reserve(sequence.size() * 2);
  for (const FeatureVector& f : sequence) {
    out.push_back((f.flexor - scaling.input_mean[0]) / scaling.input_std[0]);
    out.push_back((f.extensor - scaling.input_mean[1]) / scaling.input_std[1]);
  }
  return out;
}

void ClstmModel::set_scaling(const ClstmScaling& scaling) {
  if (!(scaling.input_std[0] > 0.0 && scaling.input_std[1] > 0.0 && scaling.output_std > 0.0)) {
    throw std::invalid_argument("C-LSTM scaling needs positive standard deviations");
  }
  scaling_ = scaling;
}

double ClstmModel::predict(std::span<const FeatureVector> sequence) const {
  if (!trained()) throw std::logic_error("C-LSTM model is not trained");
  if (shape_.inputs != 2) throw std::logic_error("C-LSTM feature prediction needs 2 inputs");
  if (sequence.size() != shape_.seq_len) {
    throw std::invalid_argument("C-LSTM expects a sequence of " + std::to_string(shape_.seq_len) +
                                " feature vectors, got " + std::to_string(sequence.size()));
  }
  thread_local ClstmCache cache;
  thread_local std::vector<double> flat;
  flat.clear();
  for (const FeatureVector& f : sequence) {
    flat.push_back((f.flexor - scaling_.input_mean[0]) / scaling_.input_std[0]);
    flat.push_back((f.extensor - scaling_.input_mean[1]) / scaling_.input_std[1]);
  }
  return scaling_.output_mean + scaling_.output_std * clstm_forward(*this, flat, cache);
}

double clstm_forward(const ClstmModel& model, std::span<const double> sequence, ClstmCache& cache) {
  if (!model.trained()) throw std::logic_error("C-LSTM model is not trained");
  const ClstmShape& s = model.shape();
  if (s.seq_len < s.kernel) throw std::invalid_argument("sequence shorter than the kernel");
  if (sequence.size() != s.seq_len * s.inputs) {
    throw std::invalid_argument("C-LSTM input must be seq_len x inputs values");
  }
  const ClstmLayout& l = model.layout();
  const double* p = model.params().data();
  const auto& k = simd::kernels();
  const std::size_t steps = s.conv_steps();
  const std::size_t kc = s.kernel * s.inputs;

  cache.input.assign(sequence.begin(), sequence.end());
  cache.conv_z.resize(steps * s.filters);
  cache.conv_y.resize(steps * s.filters);
  for (std::size_t t = 0; t < steps; ++t) {
    double* z = cache.conv_z.data() + t * s.filters;
    std::copy(p + l.conv_b, p + l.conv_b + s.filters, z);
    k.gemv(p + l.conv_w, s.filters, kc, cache.input.data() + t * s.inputs, z);
    double* y = cache.conv_y.data() + t * s.filters;
    for (std::size_t f = 0; f < s.filters; ++f) y[f] = z[f] > 0.0 ? z[f] : 0.0;
  }

  cache.gates1.resize(steps * 4 * s.hidden1);
  cache.cell1.resize(steps * s.hidden1);
  cache.hidden1.resize(steps * s.hidden1);
  lstm_forward({p + l.l1_w, p + l.l1_u, p + l.l1_b, s.filters, s.hidden1}, cache.conv_y.data(),
               steps, cache.gates1.data(), cache.cell1.data(), cache.hidden1.data());

  cache.gates2.resize(steps * 4 * s.hidden2);
  cache.cell2.resize(steps * s.hidden2);
  cache.hidden2.resize(steps * s.hidden2);
  lstm_forward({p + l.l2_w, p + l.l2_u, p + l.l2_b, s.hidden1, s.hidden2}, cache.hidden1.data(),
               steps, cache.gates2.data(), cache.cell2.data(), cache.hidden2.data());

  const double* last = cache.hidden2.data() + (steps - 1) * s.hidden2;
  cache.output = k.dot(p + l.dense_w, last, s.hidden2) + p[l.dense_b];
  cache.model = &model;
  cache.model_version = model.version();
  return cache.output;
}

void clstm_backward(const ClstmModel& model, const ClstmCache& cache, double dloss_doutput,
                    std::span<double> grad) {
  if (cache.model != &model || cache.model_version != model.version()) {
    throw std::logic_error("C-LSTM cache does not match the model's current weights");
  }
  const ClstmLayout& l = model.layout();
  if (grad.size() != l.total) throw std::invalid_argument("gradient buffer has the wrong size");
  const ClstmShape& s = model.shape();
  const double* p = model.params().data();
  double* g = grad.data();
  const auto& k = simd::kernels();
  const std::size_t steps = s.conv_steps();
  const std::size_t kc = s.kernel * s.inputs;

  // Dense head on the last hidden state of the second LSTM.
  const double* last = cache.hidden2.data() + (steps - 1) * s.hidden2;
  k.axpy(dloss_doutput, last, g + l.dense_w, s.hidden2);
  g[l.dense_b] += dloss_doutput;

  std::vector<double> dh2(steps * s.hidden2, 0.0);
  k.axpy(dloss_doutput, p + l.dense_w, dh2.data() + (steps - 1) * s.hidden2, s.hidden2);

  std::vector<double> dh1(steps * s.hidden1, 0.0);
  lstm_backward({p + l.l2_w, p + l.l2_u, p + l.l2_b, s.hidden1, s.hidden2},
                {g + l.l2_w, g + l.l2_u, g + l.l2_b}, cache.hidden1.data(), steps,
                cache.gates2.data(), cache.cell2.data(), cache.hidden2.data(), dh2.data(),
                dh1.data());

  std::vector<double> dy(steps * s.filters, 0.0);
  lstm_backward({p + l.l1_w, p + l.l1_u, p + l.l1_b, s.filters, s.hidden1},
                {g + l.l1_w, g + l.l1_u, g + l.l1_b}, cache.conv_y.data(), steps,
                cache.gates1.data(), cache.cell1.data(), cache.hidden1.data(), dh1.data(),
                dy.data());

  for (std::size_t t = 0; t < steps; ++t) {
    double* dz = dy.data() + t * s.filters;
    const double* z = cache.conv_z.data() + t * s.filters;
    for (std::size_t f = 0; f < s.filters; ++f) {
      if (!(z[f] > 0.0)) dz[f] = 0.0;
      g[l.conv_b + f] += dz[f];
    }
    k.ger(1.0, dz, s.filters, cache.input.data() + t * s.inputs, kc, g + l.conv_w);
  }
}

}  // namespace emgfinger::estimators
