#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "coldbrew/mlp.hpp"
#include "coldbrew/splits.hpp"
#include "coldbrew/teacher.hpp"

namespace coldbrew {

/// Selected bank rows (best first) and their attention weights.
template <typename Scalar>
struct TopK {
  NodeList index;
  std::vector<Scalar> weight;
};

/// Scores the query against every bank row, keeps the K best (lower row id
/// wins ties) and applies a softmax over the kept scores only.
template <typename Scalar, typename Derived>
TopK<Scalar> topk_attention(const Eigen::MatrixBase<Derived>& e_hat, const Matrix<Scalar>& bank, Eigen::Index k) {
  const Eigen::Index n = bank.rows();
  if (k < 1 || k > n) throw InvalidInput("top-K: K must be in [1, N]");
  if (e_hat.size() != bank.cols()) throw InvalidInput("top-K: query width differs from bank width");
  const RowVector<Scalar> q = e_hat.template cast<Scalar>();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scores = bank * q.transpose();
  NodeList order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), NodeId{0});
  auto better = [&scores](NodeId a, NodeId b) { return scores(a) != scores(b) ? scores(a) > scores(b) : a < b; };
  std::partial_sort(order.begin(), order.begin() + k, order.end(), better);
  TopK<Scalar> out;
  out.index.assign(order.begin(), order.begin() + k);
  const Scalar top = scores(out.index.front());
  Scalar total = 0;
  for (NodeId j : out.index) {
    const Scalar w = std::exp(scores(j) - top);
    out.weight.push_back(w);
    total += w;
  }
  for (Scalar& w : out.weight) w /= total;
  return out;
}

/// Weighted sum of the selected bank rows.
template <typename Scalar>
RowVector<Scalar> combine(const TopK<Scalar>& sel, const Matrix<Scalar>& bank) {
  RowVector<Scalar> out = RowVector<Scalar>::Zero(bank.cols());
  for (std::size_t i = 0; i < sel.index.size(); ++i) out += sel.weight[i] * bank.row(sel.index[i]);
  return out;
}

/// Virtual-neighborhood embedding of one query.
template <typename Scalar, typename Derived>
RowVector<Scalar> virtual_neighborhood(const Eigen::MatrixBase<Derived>& e_hat, const Matrix<Scalar>& bank,
                                       Eigen::Index k) {
  return combine(topk_attention<Scalar>(e_hat, bank, k), bank);
}

inline constexpr std::size_t kDefaultCacheBudgetBytes = std::size_t{1} << 30;

template <typename Scalar>
struct TopKCache {
  Eigen::Index k = 0;
  std::vector<TopK<Scalar>> rows;
};

/// Top-K selections for every row of `e_hat`. Throws when the cache would
/// exceed `budget_bytes`.
template <typename Scalar>
TopKCache<Scalar> precompute_topk(const Matrix<Scalar>& e_hat, const Matrix<Scalar>& bank, Eigen::Index k,
                                  std::size_t budget_bytes = kDefaultCacheBudgetBytes) {
  const std::size_t bytes = static_cast<std::size_t>(e_hat.rows()) * static_cast<std::size_t>(std::max<Eigen::Index>(k, 0)) *
                            (sizeof(NodeId) + sizeof(Scalar));
  if (bytes > budget_bytes)
    throw InvalidInput("top-K cache needs " + std::to_string(bytes) + " bytes, over the budget of " +
                       std::to_string(budget_bytes));
  TopKCache<Scalar> cache;
  cache.k = k;
  cache.rows.reserve(static_cast<std::size_t>(e_hat.rows()));
  for (Eigen::Index i = 0; i < e_hat.rows(); ++i) cache.rows.push_back(topk_attention<Scalar>(e_hat.row(i), bank, k));
  return cache;
}

template <typename Scalar>
Matrix<Scalar> virtual_embeddings(const TopKCache<Scalar>& cache, const Matrix<Scalar>& bank) {
  Matrix<Scalar> out(static_cast<Eigen::Index>(cache.rows.size()), bank.cols());
  for (std::size_t i = 0; i < cache.rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = combine(cache.rows[i], bank);
  return out;
}

struct StudentConfig {
  MlpConfig xi1;
  MlpConfig xi2;
  Eigen::Index k = 10;
  BankMode bank_mode = BankMode::concat;
  /// Ablation: replace the virtual-neighborhood embedding with zeros.
  bool zero_virtual = false;
  /// Also train the second stage on head and middle train nodes.
  bool widen_xi2 = false;
  std::size_t cache_budget_bytes = kDefaultCacheBudgetBytes;

  StudentConfig() {
    xi1.optimizer.weight_decay = 0.0;
    xi1.dropout = 0.0;
  }
  KeyValues describe() const;
};

/// Two MLPs and the reference bank. Inference reads node features only.
template <typename Scalar>
struct StudentModel {
  Mlp<Scalar> xi1;
  Mlp<Scalar> xi2;
  EmbeddingBank<Scalar> bank;
  Eigen::Index k = 10;
  bool zero_virtual = false;

  /// [x, e~] for every row of `x`.
  Matrix<Scalar> second_stage_input(const Matrix<Scalar>& x) {
    const Matrix<Scalar> e_hat = xi1.predict(x);
    Matrix<Scalar> out(x.rows(), x.cols() + bank.matrix.cols());
    out.leftCols(x.cols()) = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out.row(i).rightCols(bank.matrix.cols()) =
          zero_virtual ? RowVector<Scalar>::Zero(bank.matrix.cols()) : virtual_neighborhood(e_hat.row(i), bank.matrix, k);
    return out;
  }

  /// Class probabilities (or raw outputs when `softmax` is false) per row.
  Matrix<Scalar> infer(const Matrix<Scalar>& x, bool softmax = true) {
    if (x.cols() != xi1.in_dim()) throw InvalidInput("student: feature width mismatch");
    const Matrix<Scalar> out = xi2.predict(second_stage_input(x));
    return softmax ? softmax_rows(out) : out;
  }
};

/// Feature rows joined with precomputed virtual embeddings.
template <typename Scalar>
Matrix<Scalar> join_features(const Matrix<Scalar>& x, const Matrix<Scalar>& e_tilde) {
  Matrix<Scalar> out(x.rows(), x.cols() + e_tilde.cols());
  out << x, e_tilde;
  return out;
}

/// First stage: regress bank rows from features over `non_isolated`, holding
/// out a seeded 10% for early stopping.
template <typename Scalar>
Mlp<Scalar> train_xi1(const GraphBundle& g, const EmbeddingBank<Scalar>& bank, const NodeList& non_isolated,
                      const DegreeSplits& splits, const MlpConfig& cfg, std::uint64_t seed, FitResult* result = nullptr) {
  cfg.validate();
  if (bank.matrix.rows() != g.num_nodes()) throw InvalidInput("student: bank and graph node counts differ");
  for (NodeId v : non_isolated)
    if (std::binary_search(splits.isolation.begin(), splits.isolation.end(), v))
      throw InvalidInput("student: first-stage nodes must exclude isolation nodes");
  NodeList nodes = non_isolated;
  std::sort(nodes.begin(), nodes.end());
  Rng rng(seed);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  const std::size_t held = nodes.size() / 10;
  NodeList val(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(held));
  NodeList train(nodes.begin() + static_cast<std::ptrdiff_t>(held), nodes.end());
  Mlp<Scalar> net(g.feature_dim(), bank.matrix.cols(), cfg.hidden_layers, cfg.hidden_dim, cfg.dropout, rng, "xi1");
  const FitResult r = train_regressor(net, g.features.cast<Scalar>().eval(), bank.matrix, train, val, cfg, seed + 1);
  if (result != nullptr) *result = r;
  return net;
}

/// Nodes the second stage trains and validates on.
struct SecondStageNodes {
  NodeList train;
  NodeList val;
};

SecondStageNodes second_stage_nodes(const DegreeSplits& splits, bool widen);

/// Second stage: cross entropy on [x, e~] over train(tail) and
/// train(isolation); validation on val(tail) and val(isolation).
template <typename Scalar>
Mlp<Scalar> train_xi2(const GraphBundle& g, const Matrix<Scalar>& e_tilde, const DegreeSplits& splits,
                      const StudentConfig& cfg, std::uint64_t seed, FitResult* result = nullptr) {
  cfg.xi2.validate();
  const auto nodes = second_stage_nodes(splits, cfg.widen_xi2);
  if (nodes.train.empty()) throw InvalidInput("student: empty second-stage training set");
  const Matrix<Scalar> x = g.features.cast<Scalar>();
  const Matrix<Scalar> input =
      join_features(x, cfg.zero_virtual ? Matrix<Scalar>::Zero(e_tilde.rows(), e_tilde.cols()).eval() : e_tilde);
  Rng rng(seed);
  Mlp<Scalar> net(input.cols(), g.num_classes, cfg.xi2.hidden_layers, cfg.xi2.hidden_dim, cfg.xi2.dropout, rng, "xi2");
  const FitResult r = train_classifier(net, input, g.labels, nodes.train, nodes.val, cfg.xi2, seed + 1);
  if (result != nullptr) *result = r;
  return net;
}

template <typename Scalar>
struct StudentRun {
  StudentModel<Scalar> model;
  TopKCache<Scalar> cache;
  TrainReport report;
  std::vector<int> predictions;
};

/// Full student pipeline on top of a teacher bank.
template <typename Scalar>
StudentRun<Scalar> train_student(const GraphBundle& g, const DegreeSplits& splits, EmbeddingBank<Scalar> bank,
                                 const StudentConfig& cfg, std::uint64_t seed) {
  StudentRun<Scalar> run;
  auto& m = run.model;
  m.k = cfg.k;
  m.zero_virtual = cfg.zero_virtual;
  NodeList non_isolated;
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    if (!std::binary_search(splits.isolation.begin(), splits.isolation.end(), v)) non_isolated.push_back(v);
  m.xi1 = train_xi1(g, bank, non_isolated, splits, cfg.xi1, seed);
  const Matrix<Scalar> x = g.features.cast<Scalar>();
  run.cache = precompute_topk(m.xi1.predict(x), bank.matrix, cfg.k, cfg.cache_budget_bytes);
  const Matrix<Scalar> e_tilde = virtual_embeddings(run.cache, bank.matrix);
  m.bank = std::move(bank);
  FitResult r;
  m.xi2 = train_xi2(g, e_tilde, splits, cfg, seed + 2, &r);
  const Matrix<Scalar> input =
      join_features(x, cfg.zero_virtual ? Matrix<Scalar>::Zero(e_tilde.rows(), e_tilde.cols()).eval() : e_tilde);
  run.predictions = row_argmax(m.xi2.predict(input));
  run.report.model = "student";
  run.report.seed = seed;
  run.report.config = cfg.describe();
  run.report.fit = r;
  run.report.val_accuracy = r.best_val;
  run.report.test_accuracy = split_accuracies(run.predictions, g, splits);
  return run;
}

}  // namespace coldbrew
