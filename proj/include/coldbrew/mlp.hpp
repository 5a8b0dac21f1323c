#pragma once

#include <span>
#include <string>
#include <vector>

#include "coldbrew/io.hpp"
#include "coldbrew/ops.hpp"
#include "coldbrew/optimizer.hpp"
#include "coldbrew/training.hpp"

namespace coldbrew {

struct MlpConfig {
  int hidden_layers = 2;
  Eigen::Index hidden_dim = 128;
  OptimizerConfig optimizer{OptimizerKind::adam, 0.001, 5e-4};
  double dropout = 0.5;
  int max_epochs = 1000;
  int patience = 100;

  void validate() const;
  KeyValues describe() const;
};

/// Fully connected ReLU network with biases; the output layer is linear.
/// With hidden_layers = 0 it is a single affine map.
template <typename Scalar>
class Mlp {
 public:
  Mlp() = default;
  Mlp(Eigen::Index in_dim, Eigen::Index out_dim, int hidden_layers, Eigen::Index hidden_dim, double dropout, Rng& rng,
      const std::string& prefix = "mlp")
      : in_dim_(in_dim), out_dim_(out_dim), dropout_(dropout) {
    if (in_dim < 1 || out_dim < 1 || hidden_layers < 0 || (hidden_layers > 0 && hidden_dim < 1))
      throw InvalidInput("mlp: invalid dimensions");
    Eigen::Index prev = in_dim;
    for (int l = 0; l <= hidden_layers; ++l) {
      const Eigen::Index next = l == hidden_layers ? out_dim : hidden_dim;
      const std::string tag = prefix + ".layer" + std::to_string(l);
      weights_.emplace_back(tag + ".weight", glorot_uniform<Scalar>(prev, next, rng));
      biases_.emplace_back(tag + ".bias", Matrix<Scalar>::Zero(1, next), false);
      prev = next;
    }
  }

  Eigen::Index in_dim() const { return in_dim_; }
  Eigen::Index out_dim() const { return out_dim_; }
  int num_layers() const { return static_cast<int>(weights_.size()); }

  Var forward(Tape<Scalar>& t, Var x, bool training, Rng* rng) {
    if (t.value(x).cols() != in_dim_) throw InvalidInput("mlp: feature width mismatch");
    Var h = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      if (training && dropout_ > 0.0 && rng != nullptr) h = dropout(t, h, dropout_, *rng);
      h = add_row(t, matmul(t, h, t.leaf(weights_[l])), t.leaf(biases_[l]));
      if (l + 1 < weights_.size()) h = relu(t, h);
    }
    return h;
  }

  /// Inference-mode output for every row of `x`.
  Matrix<Scalar> predict(const Matrix<Scalar>& x) {
    Tape<Scalar> t(false);
    return t.value(forward(t, t.constant(x), false, nullptr));
  }

  ParameterRefs<Scalar> parameters() {
    ParameterRefs<Scalar> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.push_back(&weights_[l]);
      out.push_back(&biases_[l]);
    }
    return out;
  }

 private:
  Eigen::Index in_dim_ = 0;
  Eigen::Index out_dim_ = 0;
  double dropout_ = 0.0;
  std::vector<Parameter<Scalar>> weights_;
  std::vector<Parameter<Scalar>> biases_;
};

/// Cross-entropy training on the `train` rows of `x`; early stopping on `val`
/// accuracy (train accuracy when `val` is empty).
template <typename Scalar>
FitResult train_classifier(Mlp<Scalar>& net, const Matrix<Scalar>& x, std::span<const int> labels,
                           const NodeList& train, const NodeList& val, const MlpConfig& cfg, std::uint64_t seed) {
  if (train.empty()) throw InvalidInput("train_classifier: empty training set");
  const Matrix<Scalar> x_train = gather_rows(x, train);
  std::vector<int> y_train;
  for (NodeId v : train) y_train.push_back(labels[static_cast<std::size_t>(v)]);
  NodeList all(train.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  const NodeList& check = val.empty() ? train : val;
  const Matrix<Scalar> x_check = gather_rows(x, check);
  std::vector<int> y_check;
  for (NodeId v : check) y_check.push_back(labels[static_cast<std::size_t>(v)]);
  NodeList check_rows(check.size());
  for (std::size_t i = 0; i < check_rows.size(); ++i) check_rows[i] = static_cast<NodeId>(i);

  FitOptions opts{cfg.optimizer, cfg.max_epochs, cfg.patience, seed};
  auto loss = [&](Tape<Scalar>& t, int, Rng& rng) {
    const Var out = net.forward(t, t.constant(x_train), true, &rng);
    return cross_entropy(t, out, std::span<const int>(y_train), all);
  };
  auto score = [&]() { return classification_score(net.predict(x_check), std::span<const int>(y_check), check_rows); };
  return fit<Scalar>(net.parameters(), opts, loss, score);
}

/// Mean-squared-error regression of `target` rows from `x` rows over
/// `train`; early stopping on negative MSE over `val`.
template <typename Scalar>
FitResult train_regressor(Mlp<Scalar>& net, const Matrix<Scalar>& x, const Matrix<Scalar>& target,
                          const NodeList& train, const NodeList& val, const MlpConfig& cfg, std::uint64_t seed) {
  if (train.empty()) throw InvalidInput("train_regressor: empty training set");
  const Matrix<Scalar> x_train = gather_rows(x, train);
  const Matrix<Scalar> y_train = gather_rows(target, train);
  NodeList all(train.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  const NodeList& check = val.empty() ? train : val;
  const Matrix<Scalar> x_check = gather_rows(x, check);
  const Matrix<Scalar> y_check = gather_rows(target, check);

  FitOptions opts{cfg.optimizer, cfg.max_epochs, cfg.patience, seed};
  auto loss = [&](Tape<Scalar>& t, int, Rng& rng) {
    const Var out = net.forward(t, t.constant(x_train), true, &rng);
    return mse(t, out, y_train, all);
  };
  auto score = [&]() {
    const Matrix<Scalar> diff = net.predict(x_check) - y_check;
    return Score(-static_cast<double>(diff.squaredNorm()) / static_cast<double>(diff.size()));
  };
  return fit<Scalar>(net.parameters(), opts, loss, score);
}

}  // namespace coldbrew
