#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "coldbrew/errors.hpp"
#include "coldbrew/optimizer.hpp"
#include "coldbrew/tape.hpp"

namespace coldbrew {

struct FitOptions {
  OptimizerConfig optimizer;
  int max_epochs = 1000;
  /// Epochs without a validation improvement before stopping.
  int patience = 100;
  std::uint64_t seed = 0;
};

struct FitResult {
  std::vector<double> loss_curve;
  std::vector<double> val_curve;
  int best_epoch = -1;
  int epochs_run = 0;
  double best_val = -std::numeric_limits<double>::infinity();
};

/// Builds the training loss for one epoch on a gradient tape.
template <typename Scalar>
using EpochLoss = std::function<Var(Tape<Scalar>&, int epoch, Rng&)>;

/// Validation result; higher is better. `tiebreak` decides between equal
/// values (for classifiers, the negative validation loss).
struct Score {
  double value = 0.0;
  double tiebreak = 0.0;
  Score(double v = 0.0, double t = 0.0) : value(v), tiebreak(t) {}
};

using ValidationScore = std::function<Score()>;

/// Accuracy (percent) of the rows of `logits` against `labels`, with mean
/// cross entropy as the tie-break.
template <typename Scalar>
Score classification_score(const Matrix<Scalar>& logits, std::span<const int> labels, const NodeList& rows) {
  if (rows.empty()) throw InvalidInput("classification_score: empty node set");
  std::size_t hit = 0;
  double loss = 0.0;
  for (NodeId v : rows) {
    const auto row = logits.row(v);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < row.size(); ++j)
      if (row(j) > row(best)) best = j;
    const int y = labels[static_cast<std::size_t>(v)];
    hit += best == y ? 1 : 0;
    const double m = static_cast<double>(row.maxCoeff());
    loss += std::log((row.template cast<double>().array() - m).exp().sum()) + m - static_cast<double>(row(y));
  }
  const double n = static_cast<double>(rows.size());
  return {100.0 * static_cast<double>(hit) / n, -loss / n};
}

/// Full-batch training with early stopping. The parameters of the epoch with
/// the best validation score are restored at the end; an epoch counts as an
/// improvement when its value is higher, or equal with a higher tie-break.
template <typename Scalar>
FitResult fit(const ParameterRefs<Scalar>& params, const FitOptions& opts, const EpochLoss<Scalar>& loss_fn,
              const ValidationScore& validate) {
  if (opts.max_epochs < 1 || opts.patience < 1) throw InvalidInput("fit: max_epochs and patience must be positive");
  Optimizer<Scalar> opt(opts.optimizer, params);
  Rng rng(opts.seed);
  FitResult out;
  std::vector<Matrix<Scalar>> best;
  for (const auto* p : params) best.push_back(p->value);
  double best_tiebreak = 0.0;
  for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
    opt.zero_grad();
    double loss = 0.0;
    {
      Tape<Scalar> tape(true);
      const Var l = loss_fn(tape, epoch, rng);
      loss = static_cast<double>(tape.scalar(l));
      if (!std::isfinite(loss)) throw DivergenceError("non-finite training loss", epoch);
      tape.backward(l);
    }
    opt.step();
    out.loss_curve.push_back(loss);
    out.epochs_run = epoch + 1;
    const Score score = validate();
    if (!std::isfinite(score.value)) throw DivergenceError("non-finite validation score", epoch);
    out.val_curve.push_back(score.value);
    if (out.best_epoch < 0 || score.value > out.best_val ||
        (score.value == out.best_val && score.tiebreak > best_tiebreak)) {
      out.best_val = score.value;
      best_tiebreak = score.tiebreak;
      out.best_epoch = epoch;
      for (std::size_t k = 0; k < params.size(); ++k) best[k] = params[k]->value;
    } else if (epoch - out.best_epoch >= opts.patience) {
      break;
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
  return out;
}

}  // namespace coldbrew
