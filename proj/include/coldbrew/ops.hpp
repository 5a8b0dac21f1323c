#pragma once

// Differentiable primitives recorded on a Tape. Each function computes its
// forward value eagerly and registers the matching backward rule.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coldbrew/errors.hpp"
#include "coldbrew/matrix.hpp"
#include "coldbrew/tape.hpp"

namespace coldbrew {

enum class NormKind { none, batch, pair, node, mean };

inline constexpr double kNormEpsilon = 1e-5;

std::string to_string(NormKind kind);
NormKind parse_norm_kind(const std::string& text);

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw InvalidInput(what);
}

}  // namespace detail

/// Numerically stable row-wise softmax.
template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

template <typename Scalar>
Var matmul(Tape<Scalar>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  detail::require(av.cols() == bv.rows(), "matmul: dimension mismatch");
  Matrix<Scalar> out = av * bv;
  return t.record(std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
    if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
  });
}

/// Sparse-dense product `a * x`. The sparse operator must outlive the tape.
template <typename Scalar>
Var spmm(Tape<Scalar>& t, const SparseMatrix<Scalar>& a, Var x) {
  const auto& xv = t.value(x);
  detail::require(a.cols() == xv.rows(), "spmm: dimension mismatch");
  Matrix<Scalar> out = a * xv;
  const SparseMatrix<Scalar>* op = &a;
  return t.record(std::move(out), {x}, [op, x](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> gx = op->transpose() * g;
    tp.accumulate(x, gx);
  });
}

template <typename Scalar>
Var add(Tape<Scalar>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  detail::require(av.rows() == bv.rows() && av.cols() == bv.cols(), "add: shape mismatch");
  Matrix<Scalar> out = av + bv;
  return t.record(std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

/// `a + 1 * row`: adds a 1 x d row to every row of `a`.
template <typename Scalar>
Var add_row(Tape<Scalar>& t, Var a, Var row) {
  const auto& av = t.value(a);
  const auto& rv = t.value(row);
  detail::require(rv.rows() == 1 && rv.cols() == av.cols(), "add_row: shape mismatch");
  Matrix<Scalar> out = av.rowwise() + rv.row(0);
  return t.record(std::move(out), {a, row}, [a, row](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(row)) tp.accumulate(row, g.colwise().sum());
  });
}

template <typename Scalar>
Var scale(Tape<Scalar>& t, Var a, Scalar s) {
  Matrix<Scalar> out = t.value(a) * s;
  return t.record(std::move(out), {a},
                  [a, s](Tape<Scalar>& tp, const Matrix<Scalar>& g) { tp.accumulate(a, g * s); });
}

template <typename Scalar>
Var relu(Tape<Scalar>& t, Var x) {
  Matrix<Scalar> out = t.value(x).cwiseMax(Scalar(0));
  return t.record(std::move(out), {x}, [x](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    const auto& xv = tp.value(x);
    Matrix<Scalar> gx = (xv.array() > Scalar(0)).select(g, Scalar(0));
    tp.accumulate(x, gx);
  });
}

/// Inverted dropout; the mask is drawn from `rng` at record time.
template <typename Scalar>
Var dropout(Tape<Scalar>& t, Var x, double p, Rng& rng) {
  detail::require(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
  if (p == 0.0) return x;
  const auto& xv = t.value(x);
  std::bernoulli_distribution keep(1.0 - p);
  const Scalar inv = static_cast<Scalar>(1.0 / (1.0 - p));
  Matrix<Scalar> mask(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? inv : Scalar(0);
  Matrix<Scalar> out = xv.cwiseProduct(mask);
  return t.record(std::move(out), {x}, [x, mask = std::move(mask)](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> gx = g.cwiseProduct(mask);
    tp.accumulate(x, gx);
  });
}

/// Join matrices along the feature (column) axis.
template <typename Scalar>
Var concat_cols(Tape<Scalar>& t, const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  const Eigen::Index rows = t.value(parts.front()).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    detail::require(t.value(p).rows() == rows, "concat_cols: row mismatch");
    cols += t.value(p).cols();
  }
  Matrix<Scalar> out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index c = 0;
  for (Var p : parts) {
    offsets.push_back(c);
    out.middleCols(c, t.value(p).cols()) = t.value(p);
    c += t.value(p).cols();
  }
  return t.record(std::move(out), parts, [parts, offsets](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (!tp.requires_grad(parts[k])) continue;
      Matrix<Scalar> gk = g.middleCols(offsets[k], tp.value(parts[k]).cols());
      tp.accumulate(parts[k], gk);
    }
  });
}

/// Squared Frobenius norm, as a 1x1 value.
template <typename Scalar>
Var sum_squares(Tape<Scalar>& t, Var x) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = t.value(x).squaredNorm();
  return t.record(std::move(out), {x}, [x](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> gx = tp.value(x) * (Scalar(2) * g(0, 0));
    tp.accumulate(x, gx);
  });
}

/// Mean over `mask` rows of -log softmax(logits)[label].
template <typename Scalar>
Var cross_entropy(Tape<Scalar>& t, Var logits, std::span<const int> labels, const NodeList& mask) {
  const auto& z = t.value(logits);
  if (mask.empty()) throw InvalidInput("cross_entropy: empty mask");
  detail::require(static_cast<Eigen::Index>(labels.size()) == z.rows(), "cross_entropy: label count mismatch");
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(mask.size());
  double total = 0.0;
  Matrix<Scalar> probs(static_cast<Eigen::Index>(mask.size()), z.cols());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const NodeId v = mask[k];
    const int y = labels[static_cast<std::size_t>(v)];
    if (y < 0 || y >= z.cols()) throw InvalidInput("cross_entropy: unlabeled or out-of-range node in mask");
    const auto row = z.row(v);
    const Scalar m = row.maxCoeff();
    const RowVector<Scalar> shifted = (row.array() - m).exp().matrix();
    const Scalar sum = shifted.sum();
    total += static_cast<double>(std::log(sum) + m - row(y));
    probs.row(static_cast<Eigen::Index>(k)) = shifted / sum;
  }
  Matrix<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(total) * inv_n;
  std::vector<int> picked(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) picked[k] = labels[static_cast<std::size_t>(mask[k])];
  return t.record(std::move(out), {logits},
                  [logits, mask, picked = std::move(picked), probs = std::move(probs), inv_n](
                      Tape<Scalar>& tp, const Matrix<Scalar>& g) {
                    const auto& zv = tp.value(logits);
                    Matrix<Scalar> gz = Matrix<Scalar>::Zero(zv.rows(), zv.cols());
                    const Scalar s = g(0, 0) * inv_n;
                    for (std::size_t k = 0; k < mask.size(); ++k) {
                      gz.row(mask[k]) = probs.row(static_cast<Eigen::Index>(k)) * s;
                      gz(mask[k], picked[k]) -= s;
                    }
                    tp.accumulate(logits, gz);
                  });
}

/// Mean over `rows` and all columns of (pred - target)^2.
template <typename Scalar>
Var mse(Tape<Scalar>& t, Var pred, const Matrix<Scalar>& target, const NodeList& rows) {
  const auto& p = t.value(pred);
  if (rows.empty()) throw InvalidInput("mse: empty mask");
  if (p.rows() != target.rows() || p.cols() != target.cols()) throw InvalidInput("mse: shape mismatch");
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(rows.size() * static_cast<std::size_t>(p.cols()));
  Matrix<Scalar> diff(static_cast<Eigen::Index>(rows.size()), p.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    diff.row(static_cast<Eigen::Index>(k)) = p.row(rows[k]) - target.row(rows[k]);
  Matrix<Scalar> out(1, 1);
  out(0, 0) = diff.squaredNorm() * inv_n;
  return t.record(std::move(out), {pred},
                  [pred, rows, diff = std::move(diff), inv_n](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
                    const auto& pv = tp.value(pred);
                    Matrix<Scalar> gp = Matrix<Scalar>::Zero(pv.rows(), pv.cols());
                    const Scalar s = Scalar(2) * inv_n * g(0, 0);
                    for (std::size_t k = 0; k < rows.size(); ++k)
                      gp.row(rows[k]) += diff.row(static_cast<Eigen::Index>(k)) * s;
                    tp.accumulate(pred, gp);
                  });
}

/// Normalization across nodes. `gamma`/`beta` (1 x d) are used by kind=batch
/// only and may be invalid Vars otherwise.
template <typename Scalar>
Var normalize(Tape<Scalar>& t, Var x, NormKind kind, Var gamma = {}, Var beta = {}) {
  using Mat = Matrix<Scalar>;
  const auto& xv = t.value(x);
  const Scalar eps = static_cast<Scalar>(kNormEpsilon);
  const Scalar n = static_cast<Scalar>(xv.rows());
  switch (kind) {
    case NormKind::none:
      return x;
    case NormKind::mean: {
      Mat out = xv.rowwise() - xv.colwise().mean();
      return t.record(std::move(out), {x}, [x](Tape<Scalar>& tp, const Mat& g) {
        Mat gx = g.rowwise() - g.colwise().mean();
        tp.accumulate(x, gx);
      });
    }
    case NormKind::node: {
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r =
          (xv.rowwise().squaredNorm().array() + eps).rsqrt().matrix();
      Mat out = r.asDiagonal() * xv;
      return t.record(std::move(out), {x}, [x, r](Tape<Scalar>& tp, const Mat& g) {
        const auto& xv2 = tp.value(x);
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gdotx = g.cwiseProduct(xv2).rowwise().sum();
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coeff = (r.array().cube() * gdotx.array()).matrix();
        Mat gx = r.asDiagonal() * g;
        gx -= coeff.asDiagonal() * xv2;
        tp.accumulate(x, gx);
      });
    }
    case NormKind::pair: {
      Mat centered = xv.rowwise() - xv.colwise().mean();
      const Scalar s = centered.squaredNorm() / n;
      const Scalar r = Scalar(1) / std::sqrt(s + eps);
      Mat out = centered * r;
      return t.record(std::move(out), {x},
                      [x, centered = std::move(centered), r, n](Tape<Scalar>& tp, const Mat& g) {
                        const Scalar gc = g.cwiseProduct(centered).sum();
                        Mat dc = g * r - centered * (r * r * r * gc / n);
                        Mat gx = dc.rowwise() - dc.colwise().mean();
                        tp.accumulate(x, gx);
                      });
    }
    case NormKind::batch: {
      detail::require(gamma.valid() && beta.valid(), "normalize: batch kind needs scale and shift");
      const auto& gv = t.value(gamma);
      const auto& bv = t.value(beta);
      detail::require(gv.rows() == 1 && gv.cols() == xv.cols() && bv.rows() == 1 && bv.cols() == xv.cols(),
                      "normalize: scale/shift shape mismatch");
      RowVector<Scalar> mu = xv.colwise().mean();
      Mat centered = xv.rowwise() - mu;
      RowVector<Scalar> inv_std = ((centered.colwise().squaredNorm() / n).array() + eps).rsqrt().matrix();
      Mat xhat = centered * inv_std.asDiagonal();
      Mat out = (xhat * gv.row(0).asDiagonal()).rowwise() + bv.row(0);
      return t.record(std::move(out), {x, gamma, beta},
                      [x, gamma, beta, xhat = std::move(xhat), inv_std, n](Tape<Scalar>& tp, const Mat& g) {
                        if (tp.requires_grad(beta)) tp.accumulate(beta, g.colwise().sum());
                        if (tp.requires_grad(gamma)) tp.accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
                        if (!tp.requires_grad(x)) return;
                        Mat dxhat = g * tp.value(gamma).row(0).asDiagonal();
                        RowVector<Scalar> sum_d = dxhat.colwise().sum();
                        RowVector<Scalar> sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
                        Mat gx = (dxhat * n).rowwise() - sum_d;
                        gx -= xhat * sum_dx.asDiagonal();
                        gx = gx * (inv_std / n).asDiagonal();
                        tp.accumulate(x, gx);
                      });
    }
  }
  throw InvalidInput("normalize: unknown kind");
}

/// A scored node pair for the link objective.
struct LabeledPair {
  NodeId src;
  NodeId dst;
  bool positive;
};

/// Mean binary logistic loss of sigmoid(z_src . z_dst) against the pair labels.
template <typename Scalar>
Var pair_logistic_loss(Tape<Scalar>& t, Var z, std::span<const LabeledPair> pairs) {
  if (pairs.empty()) throw InvalidInput("pair_logistic_loss: no pairs");
  const auto& zv = t.value(z);
  std::vector<Scalar> dscore(pairs.size());
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double s = static_cast<double>(zv.row(pairs[k].src).dot(zv.row(pairs[k].dst)));
    const double y = pairs[k].positive ? 1.0 : 0.0;
    // softplus(-s) for positives, softplus(s) for negatives
    const double signed_s = pairs[k].positive ? -s : s;
    total += std::max(signed_s, 0.0) + std::log1p(std::exp(-std::abs(signed_s)));
    const double sig = 1.0 / (1.0 + std::exp(-s));
    dscore[k] = static_cast<Scalar>((sig - y) * inv_n);
  }
  Matrix<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(total * inv_n);
  std::vector<LabeledPair> kept(pairs.begin(), pairs.end());
  return t.record(std::move(out), {z},
                  [z, kept = std::move(kept), dscore = std::move(dscore)](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
                    const auto& zv2 = tp.value(z);
                    Matrix<Scalar> gz = Matrix<Scalar>::Zero(zv2.rows(), zv2.cols());
                    for (std::size_t k = 0; k < kept.size(); ++k) {
                      const Scalar d = dscore[k] * g(0, 0);
                      gz.row(kept[k].src) += d * zv2.row(kept[k].dst);
                      gz.row(kept[k].dst) += d * zv2.row(kept[k].src);
                    }
                    tp.accumulate(z, gz);
                  });
}

}  // namespace coldbrew
