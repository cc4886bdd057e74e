#pragma once

// Feed-forward classifier: ReLU hidden layers, softmax cross-entropy output,
// hand-rolled backprop, seeded mini-batch SGD. Parameters live in one flat
// vector (per layer: row-major weight matrix, then bias), which is the same
// Delta currency the aggregation rules consume.
//
// There is deliberately no autodiff here; the analytic gradients are pinned
// against central finite differences in the test suite.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignins/data.hpp"
#include "alignins/rng.hpp"
#include "alignins/vec.hpp"

namespace alignins {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Prediction {
  int label;
  std::vector<double> probs;
};

struct TrainConfig {
  int local_epochs = 2;
  double lr = 0.1;
  std::size_t batch_size = 32;
  double momentum = 0.0;  // 0.1 for the momentum variant
  std::uint64_t seed = 0;
};

class MlpModel {
 public:
  static std::size_t dimension_of(std::span<const std::size_t> sizes) {
    if (sizes.size() < 2)
      throw std::invalid_argument("MlpModel: need at least input and output layers");
    std::size_t d = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      if (sizes[l] == 0 || sizes[l + 1] == 0)
        throw std::invalid_argument("MlpModel: zero-width layer");
      d += sizes[l] * sizes[l + 1] + sizes[l + 1];
    }
    return d;
  }

  MlpModel(std::vector<std::size_t> sizes, std::vector<double> flat)
      : sizes_(std::move(sizes)), params_(std::move(flat)) {
    const std::size_t want = dimension_of(sizes_);
    if (params_.size() != want)
      throw std::invalid_argument("MlpModel: flat parameter size " +
                                  std::to_string(params_.size()) + " != " +
                                  std::to_string(want));
    index_layers();
  }

  explicit MlpModel(std::vector<std::size_t> sizes)
      : sizes_(std::move(sizes)), params_(dimension_of(sizes_), 0.0) {
    index_layers();
  }

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t dimension() const { return params_.size(); }
  std::size_t input_dim() const { return sizes_.front(); }
  int num_classes() const { return int(sizes_.back()); }
  const std::vector<double>& flat() const { return params_; }
  ParamVector to_param_vector() const { return ParamVector(params_); }

  void add_delta(std::span<const double> delta) {
    check_same_dim(delta.size(), params_.size(), "MlpModel::add_delta");
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += delta[i];
  }

  void set_flat(std::vector<double> flat) {
    check_same_dim(flat.size(), params_.size(), "MlpModel::set_flat");
    params_ = std::move(flat);
  }

  // Mean cross-entropy loss over the given sample indices (all when empty).
  double loss(const LabeledDataset& data, std::span<const std::size_t> batch = {}) const {
    const auto [x, y] = gather(data, batch);
    const auto acts = forward(x);
    const auto& z = acts.back();
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double m = z.row(i).maxCoeff();
      const double lse = m + std::log((z.row(i).array() - m).exp().sum());
      total += lse - z(i, y[std::size_t(i)]);
    }
    return total / double(z.rows());
  }

  // Mean analytic gradient over the given sample indices (all when empty).
  std::vector<double> gradient(const LabeledDataset& data,
                               std::span<const std::size_t> batch = {}) const {
    const auto [x, y] = gather(data, batch);
    const auto acts = forward(x);
    const Eigen::Index b = x.rows();

    // softmax rows minus one-hot labels, pre-divided by the batch size
    MatrixRM delta = acts.back();
    for (Eigen::Index i = 0; i < b; ++i) {
      const double m = delta.row(i).maxCoeff();
      Eigen::ArrayXd e = (delta.row(i).array() - m).exp();
      delta.row(i) = (e / e.sum()).matrix();
      delta(i, y[std::size_t(i)]) -= 1.0;
    }
    delta /= double(b);

    // Accumulate into an Eigen-owned buffer: reduction kernels pick their
    // scalar/packet split from the destination address, so writing into a
    // plain heap vector would make the low bits depend on allocator state.
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(Eigen::Index(params_.size()));
    for (std::size_t l = n_layers(); l-- > 0;) {
      const std::size_t in = sizes_[l], out = sizes_[l + 1];
      Eigen::Map<MatrixRM> gw(grad.data() + w_off_[l], Eigen::Index(out), Eigen::Index(in));
      Eigen::Map<Eigen::VectorXd> gb(grad.data() + b_off_[l], Eigen::Index(out));
      gw = delta.transpose() * acts[l];
      gb = delta.colwise().sum().transpose();
      if (l > 0) {
        Eigen::Map<const MatrixRM> w(params_.data() + w_off_[l], Eigen::Index(out),
                                     Eigen::Index(in));
        delta = (delta * w).cwiseProduct(
            (acts[l].array() > 0.0).cast<double>().matrix());
      }
    }
    return std::vector<double>(grad.data(), grad.data() + grad.size());
  }

  // Argmax of softmax logits; ties resolve to the lower class index.
  Prediction predict(std::span<const double> features) const {
    check_same_dim(features.size(), input_dim(), "MlpModel::predict");
    Eigen::Map<const MatrixRM> x(features.data(), 1, Eigen::Index(input_dim()));
    const auto z = forward(MatrixRM(x)).back();
    const double m = z.row(0).maxCoeff();
    Eigen::ArrayXd e = (z.row(0).array() - m).exp();
    const Eigen::ArrayXd p = e / e.sum();
    int label = 0;
    for (int c = 1; c < num_classes(); ++c)
      if (p[c] > p[label]) label = c;
    return {label, std::vector<double>(p.data(), p.data() + p.size())};
  }

  // Batched label prediction for evaluation loops.
  std::vector<int> predict_labels(const LabeledDataset& data) const {
    check_same_dim(data.feat_dim, input_dim(), "MlpModel::predict_labels");
    Eigen::Map<const MatrixRM> x(data.features.data(), Eigen::Index(data.size()),
                                 Eigen::Index(data.feat_dim));
    const auto z = forward(MatrixRM(x)).back();
    std::vector<int> out(data.size());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      int label = 0;
      for (int c = 1; c < num_classes(); ++c)
        if (z(i, c) > z(i, label)) label = c;  // softmax is monotone in logits
      out[std::size_t(i)] = label;
    }
    return out;
  }

 private:
  std::size_t n_layers() const { return sizes_.size() - 1; }

  void index_layers() {
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      w_off_.push_back(off);
      off += sizes_[l] * sizes_[l + 1];
      b_off_.push_back(off);
      off += sizes_[l + 1];
    }
  }

  std::pair<MatrixRM, std::vector<int>> gather(const LabeledDataset& data,
                                               std::span<const std::size_t> batch) const {
    validate_dataset(data, "MlpModel");
    check_same_dim(data.feat_dim, input_dim(), "MlpModel");
    if (data.num_classes > num_classes())
      throw std::invalid_argument("MlpModel: dataset has more classes than the model");
    if (batch.empty()) {
      Eigen::Map<const MatrixRM> x(data.features.data(), Eigen::Index(data.size()),
                                   Eigen::Index(data.feat_dim));
      return {MatrixRM(x), data.labels};
    }
    MatrixRM x(batch.size(), data.feat_dim);
    std::vector<int> y(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i] >= data.size())
        throw std::invalid_argument("MlpModel: batch index out of range");
      const auto s = data.sample(batch[i]);
      for (std::size_t j = 0; j < data.feat_dim; ++j) x(Eigen::Index(i), Eigen::Index(j)) = s[j];
      y[i] = data.labels[batch[i]];
    }
    return {std::move(x), std::move(y)};
  }

  // returns [input, hidden activations..., output logits]
  std::vector<MatrixRM> forward(MatrixRM x) const {
    std::vector<MatrixRM> acts;
    acts.reserve(n_layers() + 1);
    acts.push_back(std::move(x));
    for (std::size_t l = 0; l < n_layers(); ++l) {
      const std::size_t in = sizes_[l], out = sizes_[l + 1];
      Eigen::Map<const MatrixRM> w(params_.data() + w_off_[l], Eigen::Index(out),
                                   Eigen::Index(in));
      Eigen::Map<const Eigen::VectorXd> b(params_.data() + b_off_[l], Eigen::Index(out));
      MatrixRM z = acts.back() * w.transpose();
      z.rowwise() += b.transpose();
      if (l + 1 < n_layers()) z = z.cwiseMax(0.0);
      acts.push_back(std::move(z));
    }
    return acts;
  }

  std::vector<std::size_t> sizes_;
  std::vector<double> params_;
  std::vector<std::size_t> w_off_, b_off_;
};

// Deterministic initialization: per layer, weights uniform in
// (-1/sqrt(fan_in), +1/sqrt(fan_in)) drawn in row-major order, biases zero.
// The draw order is part of the reproducibility contract.
inline MlpModel init_model(std::vector<std::size_t> sizes, std::uint64_t seed) {
  const std::size_t d = MlpModel::dimension_of(sizes);
  std::vector<double> flat(d, 0.0);
  Rng r(seed);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(double(sizes[l]));
    for (std::size_t i = 0; i < sizes[l] * sizes[l + 1]; ++i)
      flat[off + i] = r.uniform(-bound, bound);
    off += sizes[l] * sizes[l + 1] + sizes[l + 1];  // biases stay zero
  }
  return MlpModel(std::move(sizes), std::move(flat));
}

// Local SGD. Runs cfg.local_epochs passes of seeded-shuffle mini-batches and
// returns Delta = theta_after - theta_before; the input model is untouched.
inline ParamVector local_train(const MlpModel& model, const LabeledDataset& data,
                               const TrainConfig& cfg) {
  validate_dataset(data, "local_train");
  if (cfg.local_epochs < 0) throw std::invalid_argument("local_train: negative epochs");
  if (!(cfg.lr >= 0.0)) throw std::invalid_argument("local_train: negative lr");
  if (cfg.batch_size < 1) throw std::invalid_argument("local_train: batch_size < 1");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw std::invalid_argument("local_train: momentum outside [0,1)");

  MlpModel work = model;
  std::vector<double> velocity(model.dimension(), 0.0);
  Rng r(cfg.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    r.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      const auto grad = work.gradient(data, batch);
      std::vector<double> step(model.dimension());
      for (std::size_t i = 0; i < step.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] + grad[i];
        step[i] = -cfg.lr * velocity[i];
      }
      work.add_delta(step);
    }
  }

  std::vector<double> delta(model.dimension());
  for (std::size_t i = 0; i < delta.size(); ++i)
    delta[i] = work.flat()[i] - model.flat()[i];
  return ParamVector(std::move(delta));
}

}  // namespace alignins
