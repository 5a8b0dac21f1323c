#include "coldbrew/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace coldbrew {

KeyValues LinkConfig::describe() const {
  return {{"embed_dim", std::to_string(embed_dim)},
          {"optimizer", to_string(optimizer)},
          {"max_epochs", std::to_string(max_epochs)},
          {"num_negatives", std::to_string(num_negatives)},
          {"student_dropout", format_number(student_dropout)},
          {"decoder", "dot"}};
}

std::string to_string(LinkModel m) {
  switch (m) {
    case LinkModel::gcn: return "gcn";
    case LinkModel::gcn_se: return "gcn_se";
    case LinkModel::student: return "student";
  }
  return "?";
}

LinkModel parse_link_model(const std::string& text) {
  for (LinkModel m : {LinkModel::gcn, LinkModel::gcn_se, LinkModel::student})
    if (to_string(m) == text) return m;
  throw InvalidInput("unknown link model '" + text + "'");
}

std::vector<LinkCandidate> link_candidates(const GraphBundle& post_removal, const DegreeSplits& splits,
                                           int num_negatives, std::uint64_t seed) {
  if (num_negatives < 1) throw InvalidInput("link prediction: need at least one negative per query");
  const NodeId n = post_removal.num_nodes();
  std::vector<std::set<NodeId>> removed_nb(static_cast<std::size_t>(n));
  for (const Edge& e : splits.removed_edges) {
    removed_nb[static_cast<std::size_t>(e.src)].insert(e.dst);
    removed_nb[static_cast<std::size_t>(e.dst)].insert(e.src);
  }
  auto is_neighbor = [&](NodeId s, NodeId u) {
    return post_removal.adjacency.has_edge(s, u) || removed_nb[static_cast<std::size_t>(s)].count(u) > 0;
  };
  Rng rng(seed);
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  std::vector<LinkCandidate> out;
  std::vector<Edge> edges = splits.removed_edges;
  std::sort(edges.begin(), edges.end());
  for (const Edge& e : edges) {
    for (const auto& [s, t] : {std::pair{e.src, e.dst}, std::pair{e.dst, e.src}}) {
      if (!std::binary_search(splits.isolation.begin(), splits.isolation.end(), s)) continue;
      const std::size_t available = static_cast<std::size_t>(n) - 1 -
                                    post_removal.adjacency.degree(s) - removed_nb[static_cast<std::size_t>(s)].size();
      const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(num_negatives), available);
      if (want == 0) continue;
      LinkCandidate c{s, t, {}};
      std::set<NodeId> seen;
      while (c.negatives.size() < want) {
        const NodeId u = pick(rng);
        if (u == s || is_neighbor(s, u) || !seen.insert(u).second) continue;
        c.negatives.push_back(u);
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<LabeledPair> sample_link_pairs(const CsrAdjacency& graph, const std::vector<Edge>& positives, Rng& rng) {
  const NodeId n = graph.num_nodes();
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  std::vector<LabeledPair> pairs;
  pairs.reserve(positives.size() * 2);
  for (const Edge& e : positives) {
    pairs.push_back({e.src, e.dst, true});
    if (graph.degree(e.src) + 1 >= static_cast<std::size_t>(n)) continue;
    NodeId u = pick(rng);
    while (u == e.src || graph.has_edge(e.src, u)) u = pick(rng);
    pairs.push_back({e.src, u, false});
  }
  return pairs;
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gcn: return "gcn";
    case ModelKind::gcn_se: return "gcn_se";
    case ModelKind::mlp: return "mlp";
    case ModelKind::sage: return "sage";
    case ModelKind::lp: return "lp";
    case ModelKind::student: return "student";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  for (ModelKind k : {ModelKind::gcn, ModelKind::gcn_se, ModelKind::mlp, ModelKind::sage, ModelKind::lp,
                      ModelKind::student})
    if (to_string(k) == text) return k;
  throw InvalidInput("unknown model '" + text + "'");
}

KeyValues ModelSpec::describe() const {
  KeyValues kv{{"name", name}, {"kind", to_string(kind)}};
  auto add = [&kv](const std::string& prefix, const KeyValues& more) {
    for (const auto& [k, v] : more) kv.emplace_back(prefix + k, v);
  };
  switch (kind) {
    case ModelKind::gcn:
    case ModelKind::gcn_se: add("teacher.", teacher.describe()); break;
    case ModelKind::mlp: add("mlp.", mlp.describe()); break;
    case ModelKind::sage: add("sage.", sage.describe()); break;
    case ModelKind::lp: add("lp.", lp.describe()); break;
    case ModelKind::student:
      add("teacher.", teacher.describe());
      add("student.", student.describe());
      break;
  }
  return kv;
}

std::string ModelSpec::config_hash() const {
  std::string text;
  for (const auto& [k, v] : describe()) text += k + "=" + v + "\n";
  return hash_text(text);
}

ModelSpec model_spec(const std::string& name, const TeacherConfig& teacher_base) {
  ModelSpec s;
  s.name = name;
  s.teacher = teacher_base;
  s.teacher.shared_bias = false;
  std::string kind = name;
  if (name == "gcn64" || name == "gcn_se64") {
    s.teacher.num_layers = 64;
    kind = name.substr(0, name.size() - 2);
  }
  s.kind = parse_model_kind(kind);
  s.teacher.use_se = s.kind != ModelKind::gcn;
  return s;
}

std::vector<ResultRow> aggregate(const std::vector<EvalResult>& results) {
  std::vector<ResultRow> rows;
  std::vector<std::vector<double>> values;
  for (const auto& r : results) {
    std::size_t i = 0;
    for (; i < rows.size(); ++i)
      if (rows[i].model == r.model && rows[i].split == to_string(r.split) && rows[i].metric == r.metric &&
          rows[i].config_hash == r.config_hash)
        break;
    if (i == rows.size()) {
      rows.push_back({r.model, to_string(r.split), r.metric, 0.0, 0.0, 0, r.config_hash});
      values.emplace_back();
    }
    values[i].push_back(r.value);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = values[i];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    rows[i].mean = mean;
    rows[i].std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    rows[i].seeds = v.size();
  }
  return rows;
}

namespace {

constexpr const char* kResultsHeader = "model,split,metric,mean,std,seeds,config_hash";

}  // namespace

void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << kResultsHeader << '\n';
  for (const auto& r : rows)
    out << r.model << ',' << r.split << ',' << r.metric << ',' << format_number(r.mean) << ',' << format_number(r.std)
        << ',' << r.seeds << ',' << r.config_hash << '\n';
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("missing file " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(kResultsHeader))
    throw InvalidInput("results schema mismatch in " + path.string());
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto c = split_csv_line(line);
    if (c.size() != 7) throw InvalidInput("results schema mismatch in " + path.string() + ": " + line);
    try {
      rows.push_back({c[0], c[1], c[2], std::stod(c[3]), std::stod(c[4]), std::stoul(c[5]), c[6]});
    } catch (const std::exception&) {
      throw InvalidInput("results schema mismatch in " + path.string() + ": " + line);
    }
  }
  return rows;
}

std::vector<ResultRow> merge_results(const std::vector<ResultRow>& rows) {
  std::vector<ResultRow> out;
  std::vector<std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    std::size_t i = 0;
    for (; i < out.size(); ++i)
      if (out[i].model == r.model && out[i].split == r.split && out[i].metric == r.metric &&
          out[i].config_hash == r.config_hash)
        break;
    if (i == out.size()) {
      out.push_back(r);
      groups.emplace_back();
    }
    groups[i].push_back(&r);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    double n = 0.0;
    double weighted = 0.0;
    for (const auto* r : groups[i]) {
      n += static_cast<double>(r->seeds);
      weighted += static_cast<double>(r->seeds) * r->mean;
    }
    if (n <= 0.0) throw InvalidInput("results row with zero seeds");
    const double mean = weighted / n;
    double ss = 0.0;
    for (const auto* r : groups[i]) {
      const double k = static_cast<double>(r->seeds);
      ss += (k - 1.0) * r->std * r->std + k * (r->mean - mean) * (r->mean - mean);
    }
    out[i].mean = mean;
    out[i].std = n > 1.0 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    out[i].seeds = static_cast<std::size_t>(n);
  }
  return out;
}

std::string format_table(const std::vector<ResultRow>& rows) {
  std::vector<std::string> metrics;
  for (const auto& r : rows)
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
  std::ostringstream os;
  for (const auto& metric : metrics) {
    std::size_t w_model = 5;
    for (const auto& r : rows)
      if (r.metric == metric) w_model = std::max(w_model, r.model.size());
    os << "[" << metric << "]\n";
    os << std::left << std::setw(static_cast<int>(w_model)) << "model" << "  " << std::setw(9) << "split"
       << std::right << std::setw(10) << "mean" << std::setw(9) << "std" << std::setw(6) << "seeds" << '\n';
    for (const auto& r : rows) {
      if (r.metric != metric) continue;
      os << std::left << std::setw(static_cast<int>(w_model)) << r.model << "  " << std::setw(9) << r.split
         << std::right << std::fixed << std::setprecision(metric == "mrr" ? 4 : 2) << std::setw(10) << r.mean
         << std::setw(9) << r.std << std::setw(6) << r.seeds << '\n';
      os.unsetf(std::ios::fixed);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace coldbrew
