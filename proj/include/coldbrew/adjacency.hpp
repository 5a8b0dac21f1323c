#pragma once

#include <cstdint>

#include "coldbrew/graph.hpp"
#include "coldbrew/matrix.hpp"

namespace coldbrew {

/// Symmetric normalized propagation operator D^-1/2 (A [+ I]) D^-1/2.
template <typename Scalar>
struct NormalizedAdjacency {
  SparseMatrix<Scalar> matrix;
  /// Whether I was added before normalization.
  bool self_loops = true;

  Eigen::Index size() const { return matrix.rows(); }
  /// Undirected off-diagonal edges present in the operator.
  std::size_t num_edges() const;
};

/// D^-1/2 (A + I) D^-1/2 with self_loops, else D^-1/2 A D^-1/2. A degree-0
/// node gets an all-zero row and column when self_loops is off.
template <typename Scalar>
NormalizedAdjacency<Scalar> normalized_adjacency(const CsrAdjacency& adjacency, bool self_loops);

/// Row-normalized D^-1 A without self-loops; degree-0 rows are zero.
template <typename Scalar>
SparseMatrix<Scalar> mean_adjacency(const CsrAdjacency& adjacency);

/// Keep each undirected edge of `a` with probability 1 - p (both directions
/// together) and renormalize with the same self-loop setting.
template <typename Scalar>
NormalizedAdjacency<Scalar> drop_edge(const NormalizedAdjacency<Scalar>& a, double p, std::uint64_t seed);

}  // namespace coldbrew
