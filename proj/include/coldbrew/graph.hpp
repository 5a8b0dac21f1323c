#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "coldbrew/matrix.hpp"

namespace coldbrew {

struct Edge {
  NodeId src;
  NodeId dst;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected adjacency in CSR form. Each undirected edge is stored in both
/// directions; neighbor lists are sorted, free of duplicates and self-loops.
class CsrAdjacency {
 public:
  CsrAdjacency() = default;

  struct BuildStats {
    std::size_t self_loops_dropped = 0;
    std::size_t duplicates_dropped = 0;
  };

  /// Symmetrizes, deduplicates and drops self-loops. Ids must be in [0, n).
  static CsrAdjacency from_edges(NodeId num_nodes, std::span<const Edge> edges, BuildStats* stats = nullptr);

  NodeId num_nodes() const { return static_cast<NodeId>(offsets_.empty() ? 0 : offsets_.size() - 1); }
  /// Undirected edge count.
  std::size_t num_edges() const { return indices_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId v) const {
    const auto b = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
    const auto e = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
    return {indices_.data() + b, e - b};
  }
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }
  bool has_edge(NodeId u, NodeId v) const;

  std::vector<std::size_t> degrees() const;
  /// Each undirected edge once, as (min, max), sorted.
  std::vector<Edge> undirected_edges() const;

 private:
  std::vector<std::int64_t> offsets_;
  std::vector<NodeId> indices_;
};

/// Immutable graph dataset: adjacency, node features and labels.
struct GraphBundle {
  std::string name;
  CsrAdjacency adjacency;
  Matrix<double> features;
  /// Class id in [0, num_classes) or -1 for unlabeled.
  std::vector<int> labels;
  int num_classes = 0;

  NodeId num_nodes() const { return adjacency.num_nodes(); }
  Eigen::Index feature_dim() const { return features.cols(); }

  /// Throws InvalidInput when an invariant is violated.
  void validate() const;
};

enum class FeatureEncoding { csv, bin };

struct LoadStats {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

/// Reads a bundle directory (meta, edges.tsv, labels.tsv, features.csv|bin).
GraphBundle load_bundle(const std::filesystem::path& dir, LoadStats* stats = nullptr);
void save_bundle(const GraphBundle& g, const std::filesystem::path& dir, FeatureEncoding encoding = FeatureEncoding::csv);

/// Copy of `g` with a different edge set.
GraphBundle with_adjacency(const GraphBundle& g, CsrAdjacency adjacency);

/// Mean over labeled nodes of degree >= 1 of the fraction of same-label
/// neighbors, in percent.
double homophily_beta(const GraphBundle& g);

struct SynthOptions {
  Eigen::Index feature_dim = 16;
  double mean_degree = 4.0;
  double centroid_scale = 2.0;
  double feature_noise = 1.0;
  /// Attach zero-degree nodes to one neighbor so the graph starts without
  /// isolated nodes.
  bool min_degree_one = true;
};

/// Clustered power-law graph (Chung-Lu style): expected degrees follow a
/// power law with the given exponent; a fraction `inter_cluster_noise` of the
/// edges crosses clusters. Labels are cluster ids; features are the cluster
/// centroid plus Gaussian noise.
GraphBundle synth_power_law(NodeId n, double exponent, double inter_cluster_noise, int num_clusters,
                            std::uint64_t seed, const SynthOptions& options = {});

}  // namespace coldbrew
