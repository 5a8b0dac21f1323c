#include "coldbrew/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "coldbrew/errors.hpp"
#include "coldbrew/io.hpp"

namespace coldbrew {

CsrAdjacency CsrAdjacency::from_edges(NodeId num_nodes, std::span<const Edge> edges, BuildStats* stats) {
  if (num_nodes < 0) throw InvalidInput("negative node count");
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  std::size_t self_loops = 0;
  for (const Edge& e : edges) {
    if (e.src < 0 || e.dst < 0 || e.src >= num_nodes || e.dst >= num_nodes)
      throw InvalidInput("node id out of range: " + std::to_string(e.src) + " -> " + std::to_string(e.dst));
    if (e.src == e.dst) {
      ++self_loops;
      continue;
    }
    directed.push_back({e.src, e.dst});
    directed.push_back({e.dst, e.src});
  }
  std::sort(directed.begin(), directed.end());
  const std::size_t before = directed.size();
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  CsrAdjacency csr;
  csr.offsets_.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  for (const Edge& e : directed) ++csr.offsets_[static_cast<std::size_t>(e.src) + 1];
  std::partial_sum(csr.offsets_.begin(), csr.offsets_.end(), csr.offsets_.begin());
  csr.indices_.reserve(directed.size());
  for (const Edge& e : directed) csr.indices_.push_back(e.dst);

  if (stats != nullptr) {
    stats->self_loops_dropped = self_loops;
    // each duplicate undirected edge shows up twice in the directed list
    stats->duplicates_dropped = (before - directed.size()) / 2;
  }
  return csr;
}

bool CsrAdjacency::has_edge(NodeId u, NodeId v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::size_t> CsrAdjacency::degrees() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(num_nodes()));
  for (NodeId v = 0; v < num_nodes(); ++v) out[static_cast<std::size_t>(v)] = degree(v);
  return out;
}

std::vector<Edge> CsrAdjacency::undirected_edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u)
    for (NodeId v : neighbors(u))
      if (u < v) out.push_back({u, v});
  return out;
}

void GraphBundle::validate() const {
  const auto n = static_cast<std::size_t>(num_nodes());
  if (static_cast<std::size_t>(features.rows()) != n) throw InvalidInput("dimension mismatch: feature rows != num_nodes");
  if (labels.size() != n) throw InvalidInput("dimension mismatch: label count != num_nodes");
  if (num_classes < 1) throw InvalidInput("num_classes must be positive");
  for (int y : labels)
    if (y < -1 || y >= num_classes) throw InvalidInput("label id out of range: " + std::to_string(y));
  if (!features.allFinite()) throw InvalidInput("non-finite feature value");
}

namespace {

constexpr char kFeatureMagic[4] = {'C', 'B', 'G', 'B'};

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw InvalidInput("truncated features.bin");
  return v;
}

long parse_long(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw InvalidInput("bad integer in " + context + ": '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw InvalidInput("bad integer in " + context + ": '" + s + "'");
  }
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw InvalidInput("bad feature value '" + s + "'");
    return v;
  } catch (const std::out_of_range&) {
    throw InvalidInput("non-finite feature value '" + s + "'");
  } catch (const std::invalid_argument&) {
    throw InvalidInput("bad feature value '" + s + "'");
  }
}

Matrix<double> read_features_csv(const std::filesystem::path& path, Eigen::Index n, Eigen::Index d) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("missing file " + path.string());
  Matrix<double> x(n, d);
  std::string line;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (row >= n) throw InvalidInput("dimension mismatch: features.csv has more than num_nodes rows");
    const auto cells = split_csv_line(line);
    if (static_cast<Eigen::Index>(cells.size()) != d)
      throw InvalidInput("dimension mismatch: features.csv row " + std::to_string(row) + " has " +
                         std::to_string(cells.size()) + " values, expected " + std::to_string(d));
    for (Eigen::Index j = 0; j < d; ++j) x(row, j) = parse_double(cells[static_cast<std::size_t>(j)]);
    ++row;
  }
  if (row != n) throw InvalidInput("dimension mismatch: features.csv has " + std::to_string(row) + " rows");
  return x;
}

Matrix<double> read_features_bin(const std::filesystem::path& path, Eigen::Index n, Eigen::Index d) {
  static_assert(std::endian::native == std::endian::little, "features.bin I/O assumes a little-endian host");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("missing file " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0) throw InvalidInput("features.bin: bad magic");
  if (read_u32(in) != 1) throw InvalidInput("features.bin: unsupported version");
  const auto rows = read_u32(in);
  const auto cols = read_u32(in);
  if (static_cast<Eigen::Index>(rows) != n || static_cast<Eigen::Index>(cols) != d)
    throw InvalidInput("dimension mismatch: features.bin header disagrees with meta");
  Matrix<float> raw(n, d);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!in) throw InvalidInput("truncated features.bin");
  return raw.cast<double>();
}

}  // namespace

GraphBundle load_bundle(const std::filesystem::path& dir, LoadStats* stats) {
  const auto meta = read_key_values(dir / "meta");
  auto field = [&](const char* key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw InvalidInput(std::string("meta is missing '") + key + "'");
    return it->second;
  };
  GraphBundle g;
  g.name = field("name");
  const long n = parse_long(field("num_nodes"), "meta");
  g.num_classes = static_cast<int>(parse_long(field("num_classes"), "meta"));
  const long d = parse_long(field("feature_dim"), "meta");
  const std::string& encoding = field("feature_encoding");
  if (n < 0 || d < 1) throw InvalidInput("meta: invalid num_nodes or feature_dim");

  std::vector<Edge> edges;
  {
    std::ifstream in(dir / "edges.tsv");
    if (!in) throw InvalidInput("missing file " + (dir / "edges.tsv").string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      std::istringstream ss(line);
      std::string a, b;
      if (!(ss >> a >> b)) throw InvalidInput("malformed edge line: " + line);
      const long u = parse_long(a, "edges.tsv");
      const long v = parse_long(b, "edges.tsv");
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw InvalidInput("node id out of range in edges.tsv: " + std::to_string(u) + " " + std::to_string(v));
      edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
  }
  CsrAdjacency::BuildStats build;
  g.adjacency = CsrAdjacency::from_edges(static_cast<NodeId>(n), edges, &build);
  if (stats != nullptr) *stats = {build.self_loops_dropped, build.duplicates_dropped};

  {
    std::ifstream in(dir / "labels.tsv");
    if (!in) throw InvalidInput("missing file " + (dir / "labels.tsv").string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      const long y = parse_long(line.back() == '\r' ? line.substr(0, line.size() - 1) : line, "labels.tsv");
      if (y >= g.num_classes || y < -1) throw InvalidInput("label id out of range: " + std::to_string(y));
      g.labels.push_back(static_cast<int>(y));
    }
    if (static_cast<long>(g.labels.size()) != n)
      throw InvalidInput("dimension mismatch: labels.tsv has " + std::to_string(g.labels.size()) + " lines");
  }

  if (encoding == "csv") {
    g.features = read_features_csv(dir / "features.csv", n, d);
  } else if (encoding == "bin") {
    g.features = read_features_bin(dir / "features.bin", n, d);
  } else {
    throw InvalidInput("meta: unknown feature_encoding '" + encoding + "'");
  }
  g.validate();
  return g;
}

void save_bundle(const GraphBundle& g, const std::filesystem::path& dir, FeatureEncoding encoding) {
  g.validate();
  std::filesystem::create_directories(dir);
  write_key_values(dir / "meta", {{"name", g.name},
                                  {"num_nodes", std::to_string(g.num_nodes())},
                                  {"num_classes", std::to_string(g.num_classes)},
                                  {"feature_dim", std::to_string(g.feature_dim())},
                                  {"feature_encoding", encoding == FeatureEncoding::csv ? "csv" : "bin"}});
  {
    std::ofstream out(dir / "edges.tsv", std::ios::binary);
    for (const Edge& e : g.adjacency.undirected_edges()) out << e.src << '\t' << e.dst << '\n';
  }
  {
    std::ofstream out(dir / "labels.tsv", std::ios::binary);
    for (int y : g.labels) out << y << '\n';
  }
  std::filesystem::remove(dir / "features.csv");
  std::filesystem::remove(dir / "features.bin");
  if (encoding == FeatureEncoding::csv) {
    std::ofstream out(dir / "features.csv", std::ios::binary);
    for (Eigen::Index i = 0; i < g.features.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.features.cols(); ++j) {
        if (j > 0) out << ',';
        out << format_number(g.features(i, j));
      }
      out << '\n';
    }
  } else {
    std::ofstream out(dir / "features.bin", std::ios::binary);
    out.write(kFeatureMagic, 4);
    const std::uint32_t header[3] = {1, static_cast<std::uint32_t>(g.features.rows()),
                                     static_cast<std::uint32_t>(g.features.cols())};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    const Matrix<float> raw = g.features.cast<float>();
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  }
}

GraphBundle with_adjacency(const GraphBundle& g, CsrAdjacency adjacency) {
  if (adjacency.num_nodes() != g.num_nodes()) throw InvalidInput("with_adjacency: node count mismatch");
  GraphBundle out = g;
  out.adjacency = std::move(adjacency);
  return out;
}

double homophily_beta(const GraphBundle& g) {
  double total = 0.0;
  std::size_t counted = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const int y = g.labels[static_cast<std::size_t>(v)];
    const auto nb = g.adjacency.neighbors(v);
    if (y < 0 || nb.empty()) continue;
    std::size_t same = 0;
    for (NodeId u : nb) same += g.labels[static_cast<std::size_t>(u)] == y ? 1 : 0;
    total += static_cast<double>(same) / static_cast<double>(nb.size());
    ++counted;
  }
  if (counted == 0) throw InvalidInput("homophily: no labeled node with degree >= 1");
  return 100.0 * total / static_cast<double>(counted);
}

GraphBundle synth_power_law(NodeId n, double exponent, double inter_cluster_noise, int num_clusters,
                            std::uint64_t seed, const SynthOptions& options) {
  if (num_clusters < 2 || n < num_clusters) throw InvalidInput("synth: need n >= num_clusters >= 2");
  if (!(exponent > 1.0)) throw InvalidInput("synth: exponent must exceed 1");
  if (inter_cluster_noise < 0.0 || inter_cluster_noise > 1.0) throw InvalidInput("synth: noise must be in [0, 1]");
  if (options.feature_dim < 1 || options.mean_degree <= 0.0) throw InvalidInput("synth: invalid options");

  Rng rng(seed);
  const auto un = static_cast<std::size_t>(n);

  std::vector<int> cluster(un);
  for (std::size_t i = 0; i < un; ++i) cluster[i] = static_cast<int>(i % static_cast<std::size_t>(num_clusters));

  // Expected-degree weights w ~ rank^(-1/(exponent-1)) over a random ranking.
  std::vector<std::size_t> rank(un);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::shuffle(rank.begin(), rank.end(), rng);
  std::vector<double> weight(un);
  for (std::size_t i = 0; i < un; ++i)
    weight[i] = std::pow(static_cast<double>(rank[i] + 1), -1.0 / (exponent - 1.0));

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_clusters));
  for (std::size_t i = 0; i < un; ++i) members[static_cast<std::size_t>(cluster[i])].push_back(i);
  std::vector<std::discrete_distribution<std::size_t>> within;
  for (const auto& m : members) {
    std::vector<double> w;
    for (std::size_t i : m) w.push_back(weight[i]);
    within.emplace_back(w.begin(), w.end());
  }
  std::discrete_distribution<std::size_t> any(weight.begin(), weight.end());
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::set<Edge> edges;
  auto add_edge = [&edges](std::size_t a, std::size_t b) {
    if (a == b) return false;
    const Edge e{static_cast<NodeId>(std::min(a, b)), static_cast<NodeId>(std::max(a, b))};
    return edges.insert(e).second;
  };
  auto pick_partner = [&](std::size_t src) {
    if (coin(rng) < inter_cluster_noise) {
      // cross-cluster partner, weighted by expected degree
      for (int tries = 0; tries < 64; ++tries) {
        const std::size_t dst = any(rng);
        if (cluster[dst] != cluster[src]) return dst;
      }
    }
    const auto c = static_cast<std::size_t>(cluster[src]);
    return members[c][within[c](rng)];
  };

  const auto target = static_cast<std::size_t>(std::llround(options.mean_degree * static_cast<double>(n) / 2.0));
  const std::size_t max_pairs = un * (un - 1) / 2;
  std::size_t attempts = 0;
  while (edges.size() < std::min(target, max_pairs) && attempts < 50 * target + 1000) {
    ++attempts;
    const std::size_t src = any(rng);
    add_edge(src, pick_partner(src));
  }

  if (options.min_degree_one) {
    std::vector<std::size_t> deg(un, 0);
    for (const Edge& e : edges) {
      ++deg[static_cast<std::size_t>(e.src)];
      ++deg[static_cast<std::size_t>(e.dst)];
    }
    for (std::size_t i = 0; i < un; ++i) {
      if (deg[i] > 0) continue;
      for (int tries = 0; tries < 64; ++tries) {
        const std::size_t j = pick_partner(i);
        if (add_edge(i, j)) {
          ++deg[i];
          ++deg[j];
          break;
        }
      }
    }
  }

  GraphBundle g;
  g.name = "synth_power_law";
  const std::vector<Edge> edge_list(edges.begin(), edges.end());
  g.adjacency = CsrAdjacency::from_edges(n, edge_list);
  g.num_classes = num_clusters;
  g.labels = cluster;

  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix<double> centroids(num_clusters, options.feature_dim);
  for (Eigen::Index i = 0; i < centroids.size(); ++i) centroids.data()[i] = options.centroid_scale * gauss(rng);
  g.features.resize(n, options.feature_dim);
  for (std::size_t i = 0; i < un; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < options.feature_dim; ++j)
      g.features(r, j) = centroids(cluster[i], j) + options.feature_noise * gauss(rng);
  }
  g.validate();
  return g;
}

}  // namespace coldbrew
