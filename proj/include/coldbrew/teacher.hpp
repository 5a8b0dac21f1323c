#pragma once

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coldbrew/adjacency.hpp"
#include "coldbrew/graph.hpp"
#include "coldbrew/io.hpp"
#include "coldbrew/metrics.hpp"
#include "coldbrew/ops.hpp"
#include "coldbrew/optimizer.hpp"
#include "coldbrew/splits.hpp"
#include "coldbrew/training.hpp"

namespace coldbrew {

enum class Residual { none, last, initial, dense, jumping };

std::string to_string(Residual r);
Residual parse_residual(const std::string& text);

struct TeacherConfig {
  int num_layers = 2;
  Eigen::Index hidden_dim = 128;
  bool use_se = true;
  /// Constrain E to one row shared by all nodes (a plain bias).
  bool shared_bias = false;
  Residual residual = Residual::none;
  NormKind norm = NormKind::pair;
  double dropout = 0.5;
  double drop_edge = 0.0;
  double eta = 1e-4;
  bool self_loops = true;
  OptimizerConfig optimizer{OptimizerKind::adam, 0.005, 5e-4};
  int max_epochs = 1000;
  int patience = 100;

  void validate() const;
  KeyValues describe() const;
  /// Applies key=value overrides using the describe() keys.
  void apply(const std::map<std::string, std::string>& kv);
};

/// Per-layer weights W, structural embeddings E and normalization parameters.
///
/// Layer l computes A (X_l W_l + E_l), then for hidden layers norm, residual
/// and ReLU in that order. The last layer returns raw logits.
template <typename Scalar>
class TeacherModel {
 public:
  TeacherModel() = default;

  TeacherModel(const TeacherConfig& cfg, NodeId num_nodes, Eigen::Index in_dim, Eigen::Index out_dim, Rng& rng)
      : cfg_(cfg), num_nodes_(num_nodes), in_dim_(in_dim), out_dim_(out_dim) {
    cfg.validate();
    if (num_nodes < 1 || in_dim < 1 || out_dim < 1) throw InvalidInput("teacher: invalid dimensions");
    const int L = cfg.num_layers;
    const Eigen::Index h = cfg.hidden_dim;
    for (int l = 0; l < L; ++l) {
      const bool last = l == L - 1;
      Eigen::Index fan_in = l == 0 ? in_dim : h;
      if (last && cfg.residual == Residual::jumping) fan_in = h * (L - 1);
      const Eigen::Index fan_out = last ? out_dim : h;
      const std::string tag = "layer" + std::to_string(l);
      weights_.emplace_back(tag + ".weight", glorot_uniform<Scalar>(fan_in, fan_out, rng));
      if (cfg.use_se) {
        const Eigen::Index rows = cfg.shared_bias ? 1 : num_nodes;
        embeddings_.emplace_back(tag + ".se", Matrix<Scalar>::Zero(rows, fan_out), false);
      }
      if (!last && cfg.norm == NormKind::batch) {
        gammas_.emplace_back(tag + ".norm_scale", Matrix<Scalar>::Ones(1, fan_out), false);
        betas_.emplace_back(tag + ".norm_shift", Matrix<Scalar>::Zero(1, fan_out), false);
      }
    }
    if (cfg.residual == Residual::initial && L > 2)
      projection_.emplace("input_projection.weight", glorot_uniform<Scalar>(in_dim, h, rng));
  }

  const TeacherConfig& config() const { return cfg_; }
  NodeId num_nodes() const { return num_nodes_; }
  Eigen::Index in_dim() const { return in_dim_; }
  Eigen::Index out_dim() const { return out_dim_; }

  /// Set once weights come from training or a checkpoint.
  bool trained() const { return trained_; }
  void set_trained(bool t = true) { trained_ = t; }

  std::vector<Parameter<Scalar>>& weights() { return weights_; }
  std::vector<Parameter<Scalar>>& embeddings() { return embeddings_; }

  ParameterRefs<Scalar> parameters() {
    ParameterRefs<Scalar> out;
    for (auto& p : weights_) out.push_back(&p);
    for (auto& p : embeddings_) out.push_back(&p);
    for (auto& p : gammas_) out.push_back(&p);
    for (auto& p : betas_) out.push_back(&p);
    if (projection_) out.push_back(&*projection_);
    return out;
  }

  /// Sum of squared structural embeddings.
  double se_norm_squared() const {
    double s = 0.0;
    for (const auto& e : embeddings_) s += static_cast<double>(e.value.squaredNorm());
    return s;
  }

  struct Trace {
    /// Output of the last layer.
    Var logits;
    /// Post-activation outputs of the hidden layers.
    std::vector<Var> hidden;
    /// X_l W_l + E_l of every layer, before aggregation.
    std::vector<Var> transformed;
  };

  /// Records the forward pass. Dropout is applied only when `training`, and
  /// then `rng` must be non-null. The adjacency must outlive the tape.
  Trace forward(Tape<Scalar>& t, const SparseMatrix<Scalar>& a, const Matrix<Scalar>& x0, bool training,
                Rng* rng) {
    if (x0.rows() != num_nodes_ || x0.cols() != in_dim_) throw InvalidInput("teacher: feature shape mismatch");
    if (a.rows() != num_nodes_ || a.cols() != num_nodes_) throw InvalidInput("teacher: adjacency shape mismatch");
    const bool drop = training && cfg_.dropout > 0.0 && rng != nullptr;
    const int L = cfg_.num_layers;
    Trace tr;
    const Var x = t.constant(x0);
    Var h = x;
    std::optional<Var> initial;
    for (int l = 0; l < L; ++l) {
      const bool last = l == L - 1;
      Var in = last && cfg_.residual == Residual::jumping ? concat_cols(t, tr.hidden) : h;
      if (drop) in = dropout(t, in, cfg_.dropout, *rng);
      Var z = matmul(t, in, t.leaf(weights_[static_cast<std::size_t>(l)]));
      if (cfg_.use_se) {
        Var e = t.leaf(embeddings_[static_cast<std::size_t>(l)]);
        z = cfg_.shared_bias ? add_row(t, z, e) : add(t, z, e);
      }
      tr.transformed.push_back(z);
      z = spmm(t, a, z);
      if (last) {
        tr.logits = z;
        break;
      }
      if (cfg_.norm == NormKind::batch) {
        z = normalize(t, z, cfg_.norm, t.leaf(gammas_[static_cast<std::size_t>(l)]),
                      t.leaf(betas_[static_cast<std::size_t>(l)]));
      } else {
        z = normalize(t, z, cfg_.norm);
      }
      if (l >= 1) {
        switch (cfg_.residual) {
          case Residual::last:
            z = add(t, z, tr.hidden.back());
            break;
          case Residual::initial:
            if (!initial) initial = matmul(t, x, t.leaf(*projection_));
            z = add(t, z, *initial);
            break;
          case Residual::dense:
            for (Var prev : tr.hidden) z = add(t, z, prev);
            break;
          case Residual::none:
          case Residual::jumping:
            break;
        }
      }
      h = relu(t, z);
      tr.hidden.push_back(h);
    }
    return tr;
  }

  /// Inference-mode logits.
  Matrix<Scalar> predict(const SparseMatrix<Scalar>& a, const Matrix<Scalar>& x0) {
    Tape<Scalar> t(false);
    return t.value(forward(t, a, x0, false, nullptr).logits);
  }

 private:
  TeacherConfig cfg_;
  NodeId num_nodes_ = 0;
  Eigen::Index in_dim_ = 0;
  Eigen::Index out_dim_ = 0;
  std::vector<Parameter<Scalar>> weights_;
  std::vector<Parameter<Scalar>> embeddings_;
  std::vector<Parameter<Scalar>> gammas_;
  std::vector<Parameter<Scalar>> betas_;
  std::optional<Parameter<Scalar>> projection_;
  bool trained_ = false;
};

/// Cross entropy over `train` plus eta times the summed squared norms of the
/// structural embeddings of every layer.
template <typename Scalar>
Var teacher_loss(Tape<Scalar>& t, TeacherModel<Scalar>& m, Var logits, std::span<const int> labels,
                 const NodeList& train) {
  Var loss = cross_entropy(t, logits, labels, train);
  const double eta = m.config().eta;
  if (!m.config().use_se || eta == 0.0) return loss;
  for (auto& e : m.embeddings()) loss = add(t, loss, scale(t, sum_squares(t, t.leaf(e)), static_cast<Scalar>(eta)));
  return loss;
}

struct TrainReport {
  std::string model;
  std::uint64_t seed = 0;
  KeyValues config;
  FitResult fit;
  /// Best validation accuracy (percent).
  double val_accuracy = 0.0;
  std::map<Split, double> test_accuracy;
};

/// Writes report.txt (key=value) and loss_curve.csv into `dir`.
void write_report(const TrainReport& r, const std::filesystem::path& dir);

template <typename Scalar>
struct TeacherRun {
  TeacherModel<Scalar> model;
  TrainReport report;
  std::vector<int> predictions;
};

/// Trains on the post-removal graph. Supervision uses the train nodes of head,
/// tail and middle; early stopping uses overall validation accuracy.
template <typename Scalar>
TeacherRun<Scalar> train_teacher(const GraphBundle& g, const DegreeSplits& splits, const TeacherConfig& cfg,
                                 std::uint64_t seed) {
  cfg.validate();
  Rng init_rng(seed);
  TeacherRun<Scalar> run{TeacherModel<Scalar>(cfg, g.num_nodes(), g.feature_dim(), g.num_classes, init_rng), {}, {}};
  auto& model = run.model;
  const auto a = normalized_adjacency<Scalar>(g.adjacency, cfg.self_loops);
  const Matrix<Scalar> x = g.features.cast<Scalar>();
  const NodeList train = splits.graph_train();
  const NodeList val = splits.parts(Split::overall).val;
  const NodeList& check = val.empty() ? train : val;

  FitOptions opts{cfg.optimizer, cfg.max_epochs, cfg.patience, seed + 1};
  NormalizedAdjacency<Scalar> dropped;
  auto loss = [&](Tape<Scalar>& t, int epoch, Rng& rng) {
    if (cfg.drop_edge > 0.0) {
      dropped = drop_edge(a, cfg.drop_edge, seed * 1000003ull + static_cast<std::uint64_t>(epoch));
      return teacher_loss(t, model, model.forward(t, dropped.matrix, x, true, &rng).logits, g.labels, train);
    }
    return teacher_loss(t, model, model.forward(t, a.matrix, x, true, &rng).logits, g.labels, train);
  };
  auto score = [&]() { return classification_score(model.predict(a.matrix, x), std::span<const int>(g.labels), check); };
  run.report.fit = fit<Scalar>(model.parameters(), opts, loss, score);
  model.set_trained();
  run.report.model = cfg.use_se ? "gcn_se" : "gcn";
  run.report.seed = seed;
  run.report.config = cfg.describe();
  run.report.val_accuracy = run.report.fit.best_val;
  run.predictions = row_argmax(model.predict(a.matrix, x));
  run.report.test_accuracy = split_accuracies(run.predictions, g, splits);
  return run;
}

enum class BankMode { final, concat };

std::string to_string(BankMode m);
BankMode parse_bank_mode(const std::string& text);

template <typename Scalar>
struct EmbeddingBank {
  Matrix<Scalar> matrix;
  BankMode mode = BankMode::concat;
  std::string source_hash;
};

/// Inference-mode bank. final: last-layer output. concat: the last-layer
/// output followed by X_l W_l + E_l of layers 0 .. L-2.
template <typename Scalar>
EmbeddingBank<Scalar> export_embedding_bank(TeacherModel<Scalar>& m, const GraphBundle& g, BankMode mode) {
  if (!m.trained()) std::cerr << "warning: exporting an embedding bank from an untrained teacher\n";
  const auto a = normalized_adjacency<Scalar>(g.adjacency, m.config().self_loops);
  const Matrix<Scalar> x = g.features.cast<Scalar>();
  Tape<Scalar> t(false);
  const auto tr = m.forward(t, a.matrix, x, false, nullptr);
  EmbeddingBank<Scalar> bank;
  bank.mode = mode;
  std::string desc;
  for (const auto& [k, v] : m.config().describe()) desc += k + "=" + v + ";";
  bank.source_hash = hash_text(desc);
  if (mode == BankMode::final) {
    bank.matrix = t.value(tr.logits);
    return bank;
  }
  std::vector<Var> parts{tr.logits};
  for (std::size_t l = 0; l + 1 < tr.transformed.size(); ++l) parts.push_back(tr.transformed[l]);
  bank.matrix = t.value(concat_cols(t, parts));
  return bank;
}

}  // namespace coldbrew
