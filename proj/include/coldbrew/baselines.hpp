#pragma once

#include <vector>

#include "coldbrew/adjacency.hpp"
#include "coldbrew/mlp.hpp"
#include "coldbrew/splits.hpp"
#include "coldbrew/teacher.hpp"

namespace coldbrew {

enum class LpMatrix { adjacency, laplacian };

std::string to_string(LpMatrix m);
LpMatrix parse_lp_matrix(const std::string& text);

struct LpConfig {
  int num_props = 50;
  LpMatrix matrix = LpMatrix::laplacian;
  double alpha = 0.9;

  void validate() const;
  KeyValues describe() const;
};

/// E(t+1) = (1 - alpha) G + alpha M E(t) from E(0) = G, where G holds one-hot
/// rows for `train` and zeros elsewhere. M is D^-1/2 A D^-1/2 (laplacian) or
/// D^-1 A (adjacency). When `trace` is set it receives E(0) .. E(T).
Matrix<double> label_propagation(const GraphBundle& g, const NodeList& train, const LpConfig& cfg,
                                 std::vector<Matrix<double>>* trace = nullptr);

struct BaselineRun {
  TrainReport report;
  std::vector<int> predictions;
};

/// Label propagation over the overall train nodes, reported like a trained model.
BaselineRun run_label_propagation(const GraphBundle& g, const DegreeSplits& splits, const LpConfig& cfg);

/// Node-wise MLP on features; trained on overall train nodes, ignores edges.
template <typename Scalar>
BaselineRun train_simple_mlp(const GraphBundle& g, const DegreeSplits& splits, const MlpConfig& cfg,
                             std::uint64_t seed, Mlp<Scalar>* model_out = nullptr) {
  cfg.validate();
  Rng rng(seed);
  Mlp<Scalar> net(g.feature_dim(), g.num_classes, cfg.hidden_layers, cfg.hidden_dim, cfg.dropout, rng, "mlp");
  const auto parts = splits.parts(Split::overall);
  const Matrix<Scalar> x = g.features.cast<Scalar>();
  BaselineRun run;
  run.report.fit = train_classifier(net, x, g.labels, parts.train, parts.val, cfg, seed + 1);
  run.report.model = "mlp";
  run.report.seed = seed;
  run.report.config = cfg.describe();
  run.report.val_accuracy = run.report.fit.best_val;
  run.predictions = row_argmax(net.predict(x));
  run.report.test_accuracy = split_accuracies(run.predictions, g, splits);
  if (model_out != nullptr) *model_out = std::move(net);
  return run;
}

struct SageConfig {
  Eigen::Index hidden_dim = 128;
  double dropout = 0.5;
  OptimizerConfig optimizer{OptimizerKind::adam, 0.005, 5e-4};
  int max_epochs = 1000;
  int patience = 100;

  void validate() const;
  KeyValues describe() const;
};

/// Two-layer GraphSAGE with mean aggregation over full neighborhoods:
/// h' = W_self h + W_neigh mean(h_j) + b, ReLU between layers. A node without
/// neighbors gets a zero neighbor term.
template <typename Scalar>
class SageModel {
 public:
  SageModel(Eigen::Index in_dim, Eigen::Index out_dim, const SageConfig& cfg, Rng& rng) : cfg_(cfg) {
    const Eigen::Index dims[3] = {in_dim, cfg.hidden_dim, out_dim};
    for (int l = 0; l < 2; ++l) {
      const std::string tag = "sage.layer" + std::to_string(l);
      self_.emplace_back(tag + ".self", glorot_uniform<Scalar>(dims[l], dims[l + 1], rng));
      neigh_.emplace_back(tag + ".neigh", glorot_uniform<Scalar>(dims[l], dims[l + 1], rng));
      bias_.emplace_back(tag + ".bias", Matrix<Scalar>::Zero(1, dims[l + 1]), false);
    }
  }

  std::vector<Parameter<Scalar>>& neighbor_weights() { return neigh_; }
  std::vector<Parameter<Scalar>>& self_weights() { return self_; }
  std::vector<Parameter<Scalar>>& biases() { return bias_; }

  Var forward(Tape<Scalar>& t, const SparseMatrix<Scalar>& mean_op, const Matrix<Scalar>& x0, bool training, Rng* rng) {
    Var h = t.constant(x0);
    for (std::size_t l = 0; l < 2; ++l) {
      if (training && cfg_.dropout > 0.0 && rng != nullptr) h = dropout(t, h, cfg_.dropout, *rng);
      Var z = add(t, matmul(t, h, t.leaf(self_[l])), matmul(t, spmm(t, mean_op, h), t.leaf(neigh_[l])));
      z = add_row(t, z, t.leaf(bias_[l]));
      h = l == 0 ? relu(t, z) : z;
    }
    return h;
  }

  Matrix<Scalar> predict(const SparseMatrix<Scalar>& mean_op, const Matrix<Scalar>& x0) {
    Tape<Scalar> t(false);
    return t.value(forward(t, mean_op, x0, false, nullptr));
  }

  ParameterRefs<Scalar> parameters() {
    ParameterRefs<Scalar> out;
    for (std::size_t l = 0; l < 2; ++l) {
      out.push_back(&self_[l]);
      out.push_back(&neigh_[l]);
      out.push_back(&bias_[l]);
    }
    return out;
  }

 private:
  SageConfig cfg_;
  std::vector<Parameter<Scalar>> self_;
  std::vector<Parameter<Scalar>> neigh_;
  std::vector<Parameter<Scalar>> bias_;
};

/// Same supervision as the teacher: train nodes outside isolation.
template <typename Scalar>
BaselineRun train_sage_mean(const GraphBundle& g, const DegreeSplits& splits, const SageConfig& cfg,
                            std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  SageModel<Scalar> model(g.feature_dim(), g.num_classes, cfg, rng);
  const SparseMatrix<Scalar> op = mean_adjacency<Scalar>(g.adjacency);
  const Matrix<Scalar> x = g.features.cast<Scalar>();
  const NodeList train = splits.graph_train();
  const NodeList val = splits.parts(Split::overall).val;
  const NodeList& check = val.empty() ? train : val;
  FitOptions opts{cfg.optimizer, cfg.max_epochs, cfg.patience, seed + 1};
  auto loss = [&](Tape<Scalar>& t, int, Rng& r) {
    return cross_entropy(t, model.forward(t, op, x, true, &r), std::span<const int>(g.labels), train);
  };
  auto score = [&]() { return classification_score(model.predict(op, x), std::span<const int>(g.labels), check); };
  BaselineRun run;
  run.report.fit = fit<Scalar>(model.parameters(), opts, loss, score);
  run.report.model = "sage";
  run.report.seed = seed;
  run.report.config = cfg.describe();
  run.report.val_accuracy = run.report.fit.best_val;
  run.predictions = row_argmax(model.predict(op, x));
  run.report.test_accuracy = split_accuracies(run.predictions, g, splits);
  return run;
}

}  // namespace coldbrew
