#pragma once

#include <map>
#include <span>
#include <vector>

#include "coldbrew/graph.hpp"
#include "coldbrew/splits.hpp"

namespace coldbrew {

/// 100 * fraction of `nodes` whose prediction matches the label.
double accuracy(std::span<const int> preds, const GraphBundle& g, const NodeList& nodes);

/// Same, against an explicit label vector.
double accuracy(std::span<const int> preds, std::span<const int> labels, const NodeList& nodes);

/// Test accuracy on every split with a nonempty test set.
std::map<Split, double> split_accuracies(std::span<const int> preds, const GraphBundle& g, const DegreeSplits& splits);

struct RankQuery {
  double positive;
  std::vector<double> negatives;
};

/// Mean reciprocal rank; rank = 1 + #negatives scoring >= the positive.
double mrr(std::span<const RankQuery> queries);
/// Ties resolved in favor of the positive.
double mrr_optimistic(std::span<const RankQuery> queries);

}  // namespace coldbrew
