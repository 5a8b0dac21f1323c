#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "coldbrew/adjacency.hpp"
#include "coldbrew/errors.hpp"
#include "coldbrew/graph.hpp"
#include "coldbrew/mlp.hpp"
#include "coldbrew/splits.hpp"
#include "helpers.hpp"

using namespace coldbrew;
using namespace coldbrew::test;

namespace {

Matrix<double> dense(const SparseMatrix<double>& s) { return Matrix<double>(s); }

GraphBundle star(NodeId leaves, int center_label, int leaf_label) {
  std::vector<Edge> edges;
  for (NodeId v = 1; v <= leaves; ++v) edges.push_back({0, v});
  std::vector<int> labels(static_cast<std::size_t>(leaves) + 1, leaf_label);
  labels[0] = center_label;
  return make_graph(leaves + 1, edges, labels, 2);
}

double spectral_radius(const SparseMatrix<double>& a, std::uint64_t seed) {
  Rng rng(seed);
  Matrix<double> v = random_matrix(a.rows(), 1, rng);
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    Matrix<double> w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = norm / v.norm();
    v = w / norm;
  }
  return lambda;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

void write_tiny_bundle(const std::filesystem::path& dir, const std::string& edges, const std::string& labels,
                       const std::string& features, int n = 3) {
  std::filesystem::create_directories(dir);
  write_text(dir / "meta", "name=tiny\nnum_nodes=" + std::to_string(n) +
                               "\nnum_classes=2\nfeature_dim=2\nfeature_encoding=csv\n");
  write_text(dir / "edges.tsv", edges);
  write_text(dir / "labels.tsv", labels);
  write_text(dir / "features.csv", features);
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("two-cluster fixture loads with 20 nodes and 2 classes") {
  const GraphBundle g = two_cluster();
  CHECK(g.num_nodes() == 20);
  CHECK(g.num_classes == 2);
  CHECK(g.adjacency.num_edges() == 41);
  CHECK_NOTHROW(g.validate());
}

TEST_CASE("fixture matches a fresh synth run with seed 7") {
  const GraphBundle fresh = synth_power_law(20, 2.5, 0.0, 2, 7);
  const GraphBundle g = two_cluster();
  CHECK(fresh.adjacency.undirected_edges() == g.adjacency.undirected_edges());
  CHECK(fresh.labels == g.labels);
  CHECK((fresh.features - g.features).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("load_bundle rejects bad input") {
  TempDir tmp("load");
  SUBCASE("edge references node id N") {
    write_tiny_bundle(tmp / "b", "0\t1\n1\t3\n", "0\n1\n0\n", "1,0\n0,1\n1,0\n");
    CHECK_THROWS_WITH_AS(load_bundle(tmp / "b"), doctest::Contains("node id out of range"), InvalidInput);
  }
  SUBCASE("missing file") {
    write_tiny_bundle(tmp / "b", "0\t1\n", "0\n1\n0\n", "1,0\n0,1\n1,0\n");
    std::filesystem::remove(tmp / "b" / "labels.tsv");
    CHECK_THROWS_WITH_AS(load_bundle(tmp / "b"), doctest::Contains("missing file"), InvalidInput);
  }
  SUBCASE("label count differs from node count") {
    write_tiny_bundle(tmp / "b", "0\t1\n", "0\n1\n", "1,0\n0,1\n1,0\n");
    CHECK_THROWS_WITH_AS(load_bundle(tmp / "b"), doctest::Contains("dimension mismatch"), InvalidInput);
  }
  SUBCASE("feature row width differs") {
    write_tiny_bundle(tmp / "b", "0\t1\n", "0\n1\n0\n", "1,0\n0,1,2\n1,0\n");
    CHECK_THROWS_WITH_AS(load_bundle(tmp / "b"), doctest::Contains("dimension mismatch"), InvalidInput);
  }
  SUBCASE("label id >= C") {
    write_tiny_bundle(tmp / "b", "0\t1\n", "0\n2\n0\n", "1,0\n0,1\n1,0\n");
    CHECK_THROWS_WITH_AS(load_bundle(tmp / "b"), doctest::Contains("label id out of range"), InvalidInput);
  }
  SUBCASE("non-finite feature") {
    write_tiny_bundle(tmp / "b", "0\t1\n", "0\n1\n0\n", "1,0\nnan,1\n1,0\n");
    CHECK_THROWS_WITH_AS(load_bundle(tmp / "b"), doctest::Contains("non-finite"), InvalidInput);
  }
}

TEST_CASE("load_bundle symmetrizes, deduplicates and drops self-loops") {
  TempDir tmp("sym");
  write_tiny_bundle(tmp / "b", "0\t1\n1\t0\n0\t1\n2\t2\n1\t2\n", "0\n1\n-1\n", "1,0\n0,1\n1,1\n");
  LoadStats stats;
  const GraphBundle g = load_bundle(tmp / "b", &stats);
  CHECK(g.adjacency.num_edges() == 2);
  CHECK(stats.self_loops_dropped == 1);
  CHECK(stats.duplicates_dropped == 2);
  CHECK(g.adjacency.has_edge(1, 0));
  CHECK(g.adjacency.has_edge(2, 1));
  CHECK_FALSE(g.adjacency.has_edge(2, 2));
  CHECK(g.labels[2] == -1);
}

TEST_CASE("bundle round-trips through both feature encodings") {
  const GraphBundle g = two_cluster();
  TempDir tmp("rt");
  for (auto enc : {FeatureEncoding::csv, FeatureEncoding::bin}) {
    const auto dir = tmp / (enc == FeatureEncoding::csv ? "csv" : "bin");
    save_bundle(g, dir, enc);
    const GraphBundle back = load_bundle(dir);
    CHECK(back.adjacency.undirected_edges() == g.adjacency.undirected_edges());
    CHECK(back.labels == g.labels);
    CHECK(back.num_classes == g.num_classes);
    if (enc == FeatureEncoding::csv) {
      CHECK(back.features == g.features);
    } else {
      CHECK(back.features == g.features.cast<float>().cast<double>());
    }
  }
}

TEST_CASE("normalized adjacency examples") {
  const GraphBundle path = make_graph(2, {{0, 1}}, {0, 1}, 2);
  SUBCASE("path without self-loops") {
    const Matrix<double> a = dense(normalized_adjacency<double>(path.adjacency, false).matrix);
    CHECK(a(0, 0) == 0.0);
    CHECK(a(0, 1) == doctest::Approx(1.0));
    CHECK(a(1, 0) == doctest::Approx(1.0));
    CHECK(a(1, 1) == 0.0);
  }
  SUBCASE("path with self-loops") {
    const Matrix<double> a = dense(normalized_adjacency<double>(path.adjacency, true).matrix);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(a(i, j) == doctest::Approx(0.5));
  }
  SUBCASE("star K_{1,3}") {
    const Matrix<double> a = dense(normalized_adjacency<double>(star(3, 0, 1).adjacency, false).matrix);
    for (int leaf = 1; leaf <= 3; ++leaf) {
      CHECK(a(0, leaf) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
      CHECK(a(leaf, 0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
    }
    CHECK(a.diagonal().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("degree-0 node has an empty row without self-loops") {
    const GraphBundle g = make_graph(3, {{0, 1}}, {0, 1, 0}, 2);
    const Matrix<double> a = dense(normalized_adjacency<double>(g.adjacency, false).matrix);
    CHECK(a.row(2).cwiseAbs().sum() == 0.0);
    CHECK(a.col(2).cwiseAbs().sum() == 0.0);
    const Matrix<double> b = dense(normalized_adjacency<double>(g.adjacency, true).matrix);
    CHECK(b(2, 2) == doctest::Approx(1.0));
  }
}

TEST_CASE("normalized adjacency is symmetric, nonnegative, with spectral radius <= 1") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GraphBundle g = random_graph(12, 0.25, 2, 3, seed);
    for (bool loops : {false, true}) {
      const Matrix<double> a = dense(normalized_adjacency<double>(g.adjacency, loops).matrix);
      CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(a.minCoeff() >= 0.0);
      if (!loops) CHECK(spectral_radius(normalized_adjacency<double>(g.adjacency, false).matrix, seed) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("mean adjacency rows sum to one for nodes with neighbors") {
  const GraphBundle g = make_graph(4, {{0, 1}, {0, 2}}, {0, 1, 0, 1}, 2);
  const Matrix<double> m = dense(mean_adjacency<double>(g.adjacency));
  CHECK(m.row(0).sum() == doctest::Approx(1.0));
  CHECK(m(0, 1) == doctest::Approx(0.5));
  CHECK(m.row(1).sum() == doctest::Approx(1.0));
  CHECK(m.row(3).sum() == 0.0);
}

TEST_CASE("degree splits on the two-cluster fixture") {
  const GraphBundle g = two_cluster();
  const auto [s, post] = make_degree_splits(g, 0.1, 0.1, 0.1, 1);
  CHECK(s.isolation.size() == 2);
  CHECK(s.tail.size() == 2);
  CHECK(s.head.size() == 2);

  // brute-force recomputation of post-removal degrees
  std::vector<std::size_t> degree(20, 0);
  for (const Edge& e : g.adjacency.undirected_edges()) {
    const bool removed = contains(s.isolation, e.src) || contains(s.isolation, e.dst);
    if (removed) continue;
    ++degree[static_cast<std::size_t>(e.src)];
    ++degree[static_cast<std::size_t>(e.dst)];
  }
  for (NodeId v = 0; v < 20; ++v) CHECK(post.adjacency.degree(v) == degree[static_cast<std::size_t>(v)]);
  for (NodeId v : s.isolation) CHECK(post.adjacency.degree(v) == 0);
}

TEST_CASE("degree splits reject bad fractions") {
  const GraphBundle g = two_cluster();
  CHECK_THROWS_WITH_AS(make_degree_splits(g, 0.0, 0.1, 0.1, 1), doctest::Contains("empty split requested"),
                       InvalidInput);
  CHECK_THROWS_AS(make_degree_splits(g, 0.5, 0.3, 0.2, 1), InvalidInput);
  CHECK_THROWS_WITH_AS(make_degree_splits(g, 0.01, 0.1, 0.1, 1), doctest::Contains("empty split requested"),
                       InvalidInput);
}

TEST_CASE("degree split invariants on random power-law graphs") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const GraphBundle g = synth_power_law(300, 2.5, 0.2, 3, seed);
    const auto [s, post] = make_degree_splits(g, 0.1, 0.1, 0.1, seed + 11);
    CAPTURE(seed);

    std::vector<int> owner(static_cast<std::size_t>(g.num_nodes()), 0);
    for (const NodeList* group : {&s.head, &s.tail, &s.isolation, &s.middle})
      for (NodeId v : *group) ++owner[static_cast<std::size_t>(v)];
    CHECK(std::all_of(owner.begin(), owner.end(), [](int c) { return c == 1; }));

    for (NodeId v : s.isolation) CHECK(post.adjacency.degree(v) == 0);
    std::size_t tail_min = SIZE_MAX;
    for (NodeId v : s.tail) tail_min = std::min(tail_min, post.adjacency.degree(v));
    CHECK(tail_min >= 1);

    std::size_t before = 0;
    std::size_t after = 0;
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      before += g.adjacency.degree(v);
      after += post.adjacency.degree(v);
    }
    CHECK(before - after == 2 * s.removed_edges.size());

    std::set<Edge> all(s.removed_edges.begin(), s.removed_edges.end());
    for (const Edge& e : post.adjacency.undirected_edges()) CHECK(all.insert(e).second);
    const auto original = g.adjacency.undirected_edges();
    CHECK(std::vector<Edge>(all.begin(), all.end()) == original);

    for (Split sp : kAllSplits) {
      const Partition p = s.parts(sp);
      std::set<NodeId> seen;
      for (const NodeList* part : {&p.train, &p.val, &p.test})
        for (NodeId v : *part) CHECK(seen.insert(v).second);
      CHECK(seen.size() == s.nodes(sp).size());
    }
    for (NodeId v : s.graph_train()) CHECK_FALSE(contains(s.isolation, v));
  }
}

TEST_CASE("degree splits are deterministic and survive save/load") {
  const GraphBundle g = synth_power_law(200, 2.5, 0.1, 3, 4);
  TempDir tmp("splits");
  const auto a = make_degree_splits(g, 0.1, 0.1, 0.1, 9);
  const auto b = make_degree_splits(g, 0.1, 0.1, 0.1, 9);
  save_splits(a.splits, tmp / "a");
  save_splits(b.splits, tmp / "b");
  for (const auto& entry : std::filesystem::directory_iterator(tmp / "a")) {
    const auto name = entry.path().filename();
    CHECK(read_file(entry.path()) == read_file(tmp / "b" / name));
  }
  const DegreeSplits back = load_splits(tmp / "a");
  CHECK(back.isolation == a.splits.isolation);
  CHECK(back.removed_edges == a.splits.removed_edges);
  CHECK(back.parts(Split::tail).val == a.splits.parts(Split::tail).val);
  const GraphBundle post = apply_removal(g, back);
  CHECK(post.adjacency.undirected_edges() == a.post_removal.adjacency.undirected_edges());

  const auto c = make_degree_splits(g, 0.1, 0.1, 0.1, 10);
  CHECK(c.splits.isolation == a.splits.isolation);
  CHECK(c.splits.parts(Split::head).train != a.splits.parts(Split::head).train);
}

TEST_CASE("homophily examples") {
  const GraphBundle triangle = make_graph(3, {{0, 1}, {1, 2}, {0, 2}}, {1, 1, 1}, 2);
  CHECK(homophily_beta(triangle) == 100.0);
  CHECK(homophily_beta(star(3, 0, 1)) == 0.0);
  const GraphBundle lonely = make_graph(2, {}, {0, 1}, 2);
  CHECK_THROWS_AS(homophily_beta(lonely), InvalidInput);
}

TEST_CASE("homophily skips degree-0 and unlabeled nodes") {
  // path 0-1-2 labels 0,0,1 plus isolated node 3 and unlabeled node 4 attached to 0
  const GraphBundle g = make_graph(5, {{0, 1}, {1, 2}, {0, 4}}, {0, 0, 1, 0, -1}, 2);
  // node 0: 1 of 2 neighbors match (the unlabeled neighbor counts as a mismatch); node 1: 1/2; node 2: 0/1
  CHECK(homophily_beta(g) == doctest::Approx(100.0 * (0.5 + 0.5 + 0.0) / 3.0));
}

TEST_CASE("homophily is invariant under node relabeling") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GraphBundle g = random_graph(30, 0.15, 3, 2, seed);
    std::vector<NodeId> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Edge> edges;
    for (const Edge& e : g.adjacency.undirected_edges()) edges.push_back({perm[e.src], perm[e.dst]});
    std::vector<int> labels(30);
    for (NodeId v = 0; v < 30; ++v) labels[perm[v]] = g.labels[v];
    const GraphBundle h = make_graph(30, edges, labels, 3);
    CHECK(homophily_beta(h) == doctest::Approx(homophily_beta(g)).epsilon(1e-12));
  }
}

TEST_CASE("synth is byte-identical for the same seed") {
  TempDir tmp("synth");
  save_bundle(synth_power_law(150, 2.5, 0.3, 3, 21), tmp / "a");
  save_bundle(synth_power_law(150, 2.5, 0.3, 3, 21), tmp / "b");
  for (const char* f : {"meta", "edges.tsv", "labels.tsv", "features.csv"})
    CHECK(read_file(tmp / "a" / f) == read_file(tmp / "b" / f));
  save_bundle(synth_power_law(150, 2.5, 0.3, 3, 22), tmp / "c");
  CHECK(read_file(tmp / "a" / "edges.tsv") != read_file(tmp / "c" / "edges.tsv"));
}

TEST_CASE("synth degree sequence is heavy-tailed") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GraphBundle g = synth_power_law(1000, 2.5, 0.1, 4, seed);
    auto deg = g.adjacency.degrees();
    std::sort(deg.begin(), deg.end());
    const double median = static_cast<double>(deg[deg.size() / 2]);
    CAPTURE(seed);
    CHECK(static_cast<double>(deg.back()) >= 10.0 * median);
    CHECK(deg.front() >= 1);
  }
}

TEST_CASE("synth noise controls homophily") {
  const double clean = homophily_beta(synth_power_law(400, 2.5, 0.0, 4, 3));
  const double noisy = homophily_beta(synth_power_law(400, 2.5, 0.6, 4, 3));
  CHECK(clean == 100.0);
  CHECK(noisy < 60.0);
}

TEST_CASE("synth rejects invalid parameters") {
  CHECK_THROWS_AS(synth_power_law(1, 2.5, 0.1, 2, 0), InvalidInput);
  CHECK_THROWS_AS(synth_power_law(20, 1.0, 0.1, 2, 0), InvalidInput);
  CHECK_THROWS_AS(synth_power_law(20, 2.5, 1.5, 2, 0), InvalidInput);
  CHECK_THROWS_AS(synth_power_law(20, 2.5, 0.1, 1, 0), InvalidInput);
}

TEST_CASE("two-cluster features are separable by an MLP") {
  const GraphBundle g = two_cluster();
  NodeList all(20);
  std::iota(all.begin(), all.end(), 0);
  MlpConfig cfg;
  cfg.hidden_dim = 16;
  cfg.dropout = 0.0;
  cfg.max_epochs = 200;
  Rng rng(0);
  Mlp<double> net(g.feature_dim(), 2, cfg.hidden_layers, cfg.hidden_dim, cfg.dropout, rng);
  train_classifier(net, g.features, g.labels, all, {}, cfg, 1);
  const auto preds = row_argmax(net.predict(g.features));
  int hits = 0;
  for (NodeId v = 0; v < 20; ++v) hits += preds[static_cast<std::size_t>(v)] == g.labels[static_cast<std::size_t>(v)];
  CHECK(hits == 20);
}

}  // TEST_SUITE
