#include "coldbrew/baselines.hpp"

namespace coldbrew {

std::string to_string(LpMatrix m) { return m == LpMatrix::adjacency ? "adjacency" : "laplacian"; }

LpMatrix parse_lp_matrix(const std::string& text) {
  if (text == "adjacency") return LpMatrix::adjacency;
  if (text == "laplacian") return LpMatrix::laplacian;
  throw InvalidInput("unknown propagation matrix '" + text + "'");
}

void LpConfig::validate() const {
  if (num_props < 1) throw InvalidInput("label propagation: num_props must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("label propagation: alpha must be in (0, 1)");
}

KeyValues LpConfig::describe() const {
  return {{"num_props", std::to_string(num_props)}, {"matrix", to_string(matrix)}, {"alpha", format_number(alpha)}};
}

Matrix<double> label_propagation(const GraphBundle& g, const NodeList& train, const LpConfig& cfg,
                                 std::vector<Matrix<double>>* trace) {
  cfg.validate();
  if (train.empty()) throw InvalidInput("label propagation: empty train mask");
  Matrix<double> base = Matrix<double>::Zero(g.num_nodes(), g.num_classes);
  for (NodeId v : train) {
    const int y = g.labels.at(static_cast<std::size_t>(v));
    if (y < 0) throw InvalidInput("label propagation: unlabeled node in train mask");
    base(v, y) = 1.0;
  }
  const SparseMatrix<double> m = cfg.matrix == LpMatrix::laplacian
                                     ? normalized_adjacency<double>(g.adjacency, false).matrix
                                     : mean_adjacency<double>(g.adjacency);
  Matrix<double> e = base;
  if (trace != nullptr) trace->assign(1, e);
  for (int t = 0; t < cfg.num_props; ++t) {
    Matrix<double> next = (1.0 - cfg.alpha) * base + cfg.alpha * (m * e);
    e = std::move(next);
    if (trace != nullptr) trace->push_back(e);
  }
  return e;
}

BaselineRun run_label_propagation(const GraphBundle& g, const DegreeSplits& splits, const LpConfig& cfg) {
  const auto parts = splits.parts(Split::overall);
  BaselineRun run;
  run.predictions = row_argmax(label_propagation(g, parts.train, cfg));
  run.report.model = "lp";
  run.report.config = cfg.describe();
  const NodeList& check = parts.val.empty() ? parts.train : parts.val;
  run.report.val_accuracy = accuracy(run.predictions, g, check);
  run.report.test_accuracy = split_accuracies(run.predictions, g, splits);
  return run;
}

void SageConfig::validate() const {
  if (hidden_dim < 1) throw InvalidInput("sage: hidden_dim must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw InvalidInput("sage: dropout must be in [0, 1)");
  if (max_epochs < 1 || patience < 1) throw InvalidInput("sage: max_epochs and patience must be positive");
}

KeyValues SageConfig::describe() const {
  return {{"hidden_dim", std::to_string(hidden_dim)},
          {"dropout", format_number(dropout)},
          {"optimizer", to_string(optimizer)},
          {"weight_decay", format_number(optimizer.weight_decay)},
          {"max_epochs", std::to_string(max_epochs)},
          {"patience", std::to_string(patience)},
          {"aggregator", "mean"}};
}

}  // namespace coldbrew
