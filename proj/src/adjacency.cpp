#include "coldbrew/adjacency.hpp"

#include <cmath>
#include <random>

#include "coldbrew/errors.hpp"

namespace coldbrew {

template <typename Scalar>
std::size_t NormalizedAdjacency<Scalar>::num_edges() const {
  std::size_t off = 0;
  for (Eigen::Index r = 0; r < matrix.outerSize(); ++r)
    for (typename SparseMatrix<Scalar>::InnerIterator it(matrix, r); it; ++it)
      if (it.col() != r) ++off;
  return off / 2;
}

template <typename Scalar>
NormalizedAdjacency<Scalar> normalized_adjacency(const CsrAdjacency& adjacency, bool self_loops) {
  const NodeId n = adjacency.num_nodes();
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n), 0.0);
  for (NodeId v = 0; v < n; ++v) {
    const double d = static_cast<double>(adjacency.degree(v)) + (self_loops ? 1.0 : 0.0);
    inv_sqrt[static_cast<std::size_t>(v)] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(2 * adjacency.num_edges() + (self_loops ? static_cast<std::size_t>(n) : 0));
  for (NodeId u = 0; u < n; ++u) {
    const double su = inv_sqrt[static_cast<std::size_t>(u)];
    if (self_loops) triplets.emplace_back(u, u, static_cast<Scalar>(su * su));
    for (NodeId v : adjacency.neighbors(u))
      triplets.emplace_back(u, v, static_cast<Scalar>(su * inv_sqrt[static_cast<std::size_t>(v)]));
  }
  NormalizedAdjacency<Scalar> out;
  out.self_loops = self_loops;
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

template <typename Scalar>
SparseMatrix<Scalar> mean_adjacency(const CsrAdjacency& adjacency) {
  const NodeId n = adjacency.num_nodes();
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(2 * adjacency.num_edges());
  for (NodeId u = 0; u < n; ++u) {
    const auto nb = adjacency.neighbors(u);
    if (nb.empty()) continue;
    const Scalar w = Scalar(1) / static_cast<Scalar>(nb.size());
    for (NodeId v : nb) triplets.emplace_back(u, v, w);
  }
  SparseMatrix<Scalar> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

template <typename Scalar>
NormalizedAdjacency<Scalar> drop_edge(const NormalizedAdjacency<Scalar>& a, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw InvalidInput("drop_edge: p must be in [0, 1]");
  Rng rng(seed);
  std::bernoulli_distribution keep(1.0 - p);
  std::vector<Edge> kept;
  for (Eigen::Index r = 0; r < a.matrix.outerSize(); ++r)
    for (typename SparseMatrix<Scalar>::InnerIterator it(a.matrix, r); it; ++it)
      if (it.col() > r && keep(rng)) kept.push_back({static_cast<NodeId>(r), static_cast<NodeId>(it.col())});
  const auto csr = CsrAdjacency::from_edges(static_cast<NodeId>(a.size()), kept);
  return normalized_adjacency<Scalar>(csr, a.self_loops);
}

template struct NormalizedAdjacency<float>;
template struct NormalizedAdjacency<double>;
template NormalizedAdjacency<float> normalized_adjacency<float>(const CsrAdjacency&, bool);
template NormalizedAdjacency<double> normalized_adjacency<double>(const CsrAdjacency&, bool);
template SparseMatrix<float> mean_adjacency<float>(const CsrAdjacency&);
template SparseMatrix<double> mean_adjacency<double>(const CsrAdjacency&);
template NormalizedAdjacency<float> drop_edge<float>(const NormalizedAdjacency<float>&, double, std::uint64_t);
template NormalizedAdjacency<double> drop_edge<double>(const NormalizedAdjacency<double>&, double, std::uint64_t);

}  // namespace coldbrew
