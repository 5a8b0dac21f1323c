#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "coldbrew/graph.hpp"
#include "coldbrew/splits.hpp"

namespace coldbrew::test {

inline std::filesystem::path fixtures_dir() { return COLDBREW_TEST_FIXTURES; }

inline std::filesystem::path two_cluster_dir() { return fixtures_dir() / "two_cluster_20"; }
inline GraphBundle two_cluster() { return load_bundle(two_cluster_dir()); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("coldbrew_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Bundle from an explicit edge list; features default to a one-hot of the label.
inline GraphBundle make_graph(NodeId n, const std::vector<Edge>& edges, std::vector<int> labels,
                              int num_classes, Matrix<double> features = {}) {
  GraphBundle g;
  g.name = "inline";
  g.adjacency = CsrAdjacency::from_edges(n, edges);
  g.labels = std::move(labels);
  g.num_classes = num_classes;
  if (features.size() == 0) {
    features = Matrix<double>::Zero(n, num_classes);
    for (NodeId v = 0; v < n; ++v)
      if (g.labels[static_cast<std::size_t>(v)] >= 0) features(v, g.labels[static_cast<std::size_t>(v)]) = 1.0;
  }
  g.features = std::move(features);
  return g;
}

/// Erdos-Renyi style graph with Gaussian features and random labels.
inline GraphBundle random_graph(NodeId n, double p, int num_classes, Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (coin(rng)) edges.push_back({u, v});
  std::uniform_int_distribution<int> label(0, num_classes - 1);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& y : labels) y = label(rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<double> x(n, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  return make_graph(n, edges, std::move(labels), num_classes, std::move(x));
}

inline Matrix<double> random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline bool contains(const NodeList& sorted, NodeId v) { return std::binary_search(sorted.begin(), sorted.end(), v); }

}  // namespace coldbrew::test
