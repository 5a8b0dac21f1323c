#include "coldbrew/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "coldbrew/errors.hpp"
#include "coldbrew/io.hpp"

namespace coldbrew {

std::string to_string(Split s) {
  switch (s) {
    case Split::overall: return "overall";
    case Split::head: return "head";
    case Split::tail: return "tail";
    case Split::isolation: return "isolation";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  for (Split s : kAllSplits)
    if (to_string(s) == text) return s;
  throw InvalidInput("unknown split '" + text + "'");
}

namespace {

NodeList sorted_union(std::initializer_list<const NodeList*> lists) {
  NodeList out;
  for (const auto* l : lists) out.insert(out.end(), l->begin(), l->end());
  std::sort(out.begin(), out.end());
  return out;
}

Partition partition_group(NodeList group, Rng& rng) {
  std::sort(group.begin(), group.end());
  std::shuffle(group.begin(), group.end(), rng);
  const std::size_t n = group.size();
  const std::size_t n_train = n * 7 / 10;
  const std::size_t n_val = n / 10;
  Partition p;
  p.train.assign(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_train));
  p.val.assign(group.begin() + static_cast<std::ptrdiff_t>(n_train),
               group.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  p.test.assign(group.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), group.end());
  std::sort(p.train.begin(), p.train.end());
  std::sort(p.val.begin(), p.val.end());
  std::sort(p.test.begin(), p.test.end());
  return p;
}

CsrAdjacency remove_incident(const CsrAdjacency& adjacency, const std::vector<char>& isolated,
                             std::vector<Edge>* removed) {
  std::vector<Edge> kept;
  for (const Edge& e : adjacency.undirected_edges()) {
    if (isolated[static_cast<std::size_t>(e.src)] || isolated[static_cast<std::size_t>(e.dst)]) {
      if (removed != nullptr) removed->push_back(e);
    } else {
      kept.push_back(e);
    }
  }
  return CsrAdjacency::from_edges(adjacency.num_nodes(), kept);
}

}  // namespace

Partition DegreeSplits::parts(Split s) const {
  switch (s) {
    case Split::head: return head_parts;
    case Split::tail: return tail_parts;
    case Split::isolation: return isolation_parts;
    case Split::overall: {
      Partition p;
      p.train = sorted_union({&head_parts.train, &tail_parts.train, &isolation_parts.train, &middle_parts.train});
      p.val = sorted_union({&head_parts.val, &tail_parts.val, &isolation_parts.val, &middle_parts.val});
      p.test = sorted_union({&head_parts.test, &tail_parts.test, &isolation_parts.test, &middle_parts.test});
      return p;
    }
  }
  throw InvalidInput("unknown split");
}

NodeList DegreeSplits::nodes(Split s) const {
  switch (s) {
    case Split::head: return head;
    case Split::tail: return tail;
    case Split::isolation: return isolation;
    case Split::overall: return sorted_union({&head, &tail, &isolation, &middle});
  }
  throw InvalidInput("unknown split");
}

NodeList DegreeSplits::graph_train() const {
  return sorted_union({&head_parts.train, &tail_parts.train, &middle_parts.train});
}

SplitResult make_degree_splits(const GraphBundle& g, double head_frac, double tail_frac, double iso_frac,
                               std::uint64_t seed) {
  for (double f : {head_frac, tail_frac, iso_frac}) {
    if (f <= 0.0) throw InvalidInput("empty split requested");
    if (f >= 1.0) throw InvalidInput("split fractions must be in (0, 1)");
  }
  if (head_frac + tail_frac + iso_frac >= 1.0) throw InvalidInput("split fractions must sum to less than 1");

  const NodeId n = g.num_nodes();
  const auto un = static_cast<std::size_t>(n);
  auto count_for = [n](double f) { return static_cast<std::size_t>(std::lround(f * static_cast<double>(n))); };
  const std::size_t n_iso = count_for(iso_frac);
  const std::size_t n_tail = count_for(tail_frac);
  const std::size_t n_head = count_for(head_frac);
  if (n_iso == 0 || n_tail == 0 || n_head == 0) throw InvalidInput("empty split requested: graph too small");

  const auto deg = g.adjacency.degrees();
  NodeList order(un);
  for (NodeId v = 0; v < n; ++v) order[static_cast<std::size_t>(v)] = v;
  std::stable_sort(order.begin(), order.end(), [&deg](NodeId a, NodeId b) {
    return deg[static_cast<std::size_t>(a)] < deg[static_cast<std::size_t>(b)];
  });

  std::vector<char> isolated(un, 0);
  for (std::size_t k = 0; k < n_iso; ++k) isolated[static_cast<std::size_t>(order[k])] = 1;

  DegreeSplits s;
  s.head_frac = head_frac;
  s.tail_frac = tail_frac;
  s.iso_frac = iso_frac;
  s.seed = seed;
  CsrAdjacency post = remove_incident(g.adjacency, isolated, &s.removed_edges);
  // every node left without edges is a cold-start node
  for (NodeId v = 0; v < n; ++v)
    if (post.degree(v) == 0) isolated[static_cast<std::size_t>(v)] = 1;
  for (NodeId v = 0; v < n; ++v)
    if (isolated[static_cast<std::size_t>(v)]) s.isolation.push_back(v);

  const auto post_deg = post.degrees();
  NodeList rest;
  for (NodeId v = 0; v < n; ++v)
    if (!isolated[static_cast<std::size_t>(v)]) rest.push_back(v);
  std::stable_sort(rest.begin(), rest.end(), [&post_deg](NodeId a, NodeId b) {
    return post_deg[static_cast<std::size_t>(a)] < post_deg[static_cast<std::size_t>(b)];
  });
  if (rest.size() < n_tail + n_head) throw InvalidInput("empty split requested: graph too small");
  s.tail.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_tail));

  NodeList by_desc(rest.begin() + static_cast<std::ptrdiff_t>(n_tail), rest.end());
  std::stable_sort(by_desc.begin(), by_desc.end(), [&post_deg](NodeId a, NodeId b) {
    const auto da = post_deg[static_cast<std::size_t>(a)];
    const auto db = post_deg[static_cast<std::size_t>(b)];
    return da != db ? da > db : a < b;
  });
  s.head.assign(by_desc.begin(), by_desc.begin() + static_cast<std::ptrdiff_t>(n_head));
  s.middle.assign(by_desc.begin() + static_cast<std::ptrdiff_t>(n_head), by_desc.end());
  for (NodeList* l : {&s.head, &s.tail, &s.middle}) std::sort(l->begin(), l->end());

  Rng rng(seed);
  s.head_parts = partition_group(s.head, rng);
  s.tail_parts = partition_group(s.tail, rng);
  s.isolation_parts = partition_group(s.isolation, rng);
  s.middle_parts = partition_group(s.middle, rng);

  return {std::move(s), with_adjacency(g, std::move(post))};
}

GraphBundle apply_removal(const GraphBundle& original, const DegreeSplits& splits) {
  std::vector<Edge> removed = splits.removed_edges;
  std::sort(removed.begin(), removed.end());
  std::vector<Edge> kept;
  for (const Edge& e : original.adjacency.undirected_edges())
    if (!std::binary_search(removed.begin(), removed.end(), e)) kept.push_back(e);
  return with_adjacency(original, CsrAdjacency::from_edges(original.num_nodes(), kept));
}

namespace {

const std::pair<const char*, Partition DegreeSplits::*> kGroups[] = {
    {"head", &DegreeSplits::head_parts},
    {"tail", &DegreeSplits::tail_parts},
    {"isolation", &DegreeSplits::isolation_parts},
    {"middle", &DegreeSplits::middle_parts},
};

}  // namespace

void save_splits(const DegreeSplits& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_ids(dir / "head.ids", s.head);
  write_ids(dir / "tail.ids", s.tail);
  write_ids(dir / "isolation.ids", s.isolation);
  write_ids(dir / "middle.ids", s.middle);
  {
    std::ofstream out(dir / "removed_edges.tsv", std::ios::binary);
    for (const Edge& e : s.removed_edges) out << e.src << '\t' << e.dst << '\n';
  }
  for (const auto& [name, member] : kGroups) {
    const Partition& p = s.*member;
    write_ids(dir / (std::string(name) + ".train.ids"), p.train);
    write_ids(dir / (std::string(name) + ".val.ids"), p.val);
    write_ids(dir / (std::string(name) + ".test.ids"), p.test);
  }
  write_key_values(dir / "splits.meta", {{"head_frac", format_number(s.head_frac)},
                                         {"tail_frac", format_number(s.tail_frac)},
                                         {"iso_frac", format_number(s.iso_frac)},
                                         {"seed", std::to_string(s.seed)},
                                         {"head", std::to_string(s.head.size())},
                                         {"tail", std::to_string(s.tail.size())},
                                         {"isolation", std::to_string(s.isolation.size())},
                                         {"middle", std::to_string(s.middle.size())},
                                         {"removed_edges", std::to_string(s.removed_edges.size())}});
}

DegreeSplits load_splits(const std::filesystem::path& dir) {
  DegreeSplits s;
  const auto meta = read_key_values(dir / "splits.meta");
  try {
    s.head_frac = std::stod(meta.at("head_frac"));
    s.tail_frac = std::stod(meta.at("tail_frac"));
    s.iso_frac = std::stod(meta.at("iso_frac"));
    s.seed = std::stoull(meta.at("seed"));
  } catch (const std::exception&) {
    throw InvalidInput("malformed splits.meta in " + dir.string());
  }
  s.head = read_ids(dir / "head.ids");
  s.tail = read_ids(dir / "tail.ids");
  s.isolation = read_ids(dir / "isolation.ids");
  s.middle = read_ids(dir / "middle.ids");
  {
    std::ifstream in(dir / "removed_edges.tsv");
    if (!in) throw InvalidInput("missing file " + (dir / "removed_edges.tsv").string());
    NodeId a = 0, b = 0;
    while (in >> a >> b) s.removed_edges.push_back({a, b});
  }
  for (const auto& [name, member] : kGroups) {
    Partition& p = s.*member;
    p.train = read_ids(dir / (std::string(name) + ".train.ids"));
    p.val = read_ids(dir / (std::string(name) + ".val.ids"));
    p.test = read_ids(dir / (std::string(name) + ".test.ids"));
  }
  return s;
}

}  // namespace coldbrew
