#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coldbrew/graph.hpp"

namespace coldbrew {

enum class Split { overall, head, tail, isolation };

std::string to_string(Split s);
Split parse_split(const std::string& text);
inline constexpr Split kAllSplits[] = {Split::overall, Split::head, Split::tail, Split::isolation};

struct Partition {
  NodeList train;
  NodeList val;
  NodeList test;
};

/// Head / tail / isolation node sets by degree. The nodes in none of the
/// three form the middle group; together all four make up "overall".
struct DegreeSplits {
  NodeList head;
  NodeList tail;
  NodeList isolation;
  NodeList middle;
  /// Edges deleted to isolate the isolation nodes, as (min, max).
  std::vector<Edge> removed_edges;

  Partition head_parts;
  Partition tail_parts;
  Partition isolation_parts;
  Partition middle_parts;

  double head_frac = 0.1;
  double tail_frac = 0.1;
  double iso_frac = 0.1;
  std::uint64_t seed = 0;

  /// Train/val/test sets of one split; overall is the union of all groups.
  Partition parts(Split s) const;
  NodeList nodes(Split s) const;
  /// Supervision set for graph models: train nodes outside isolation.
  NodeList graph_train() const;
};

struct SplitResult {
  DegreeSplits splits;
  GraphBundle post_removal;
};

/// Isolation = bottom iso_frac by degree, with all incident edges removed
/// (nodes left at degree 0 by the removal join it); tail = lowest nonzero
/// degree tail_frac of the rest; head = top head_frac. Ties break by node id.
/// Each group is split 70/10/20 into train/val/test by a seeded shuffle.
SplitResult make_degree_splits(const GraphBundle& g, double head_frac, double tail_frac, double iso_frac,
                               std::uint64_t seed);

/// Post-removal graph for splits saved earlier.
GraphBundle apply_removal(const GraphBundle& original, const DegreeSplits& splits);

/// Writes head.ids, tail.ids, isolation.ids, middle.ids, removed_edges.tsv,
/// <group>.<train|val|test>.ids and splits.meta.
void save_splits(const DegreeSplits& splits, const std::filesystem::path& dir);
DegreeSplits load_splits(const std::filesystem::path& dir);

}  // namespace coldbrew
