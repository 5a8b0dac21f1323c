#include "coldbrew/metrics.hpp"

#include "coldbrew/errors.hpp"

namespace coldbrew {

double accuracy(std::span<const int> preds, std::span<const int> labels, const NodeList& nodes) {
  if (nodes.empty()) throw InvalidInput("accuracy: empty node set");
  std::size_t hit = 0;
  for (NodeId v : nodes) {
    const auto i = static_cast<std::size_t>(v);
    if (i >= preds.size() || i >= labels.size()) throw InvalidInput("accuracy: node id out of range");
    if (labels[i] < 0) throw InvalidInput("accuracy: unlabeled node in evaluation set");
    hit += preds[i] == labels[i] ? 1 : 0;
  }
  return 100.0 * static_cast<double>(hit) / static_cast<double>(nodes.size());
}

double accuracy(std::span<const int> preds, const GraphBundle& g, const NodeList& nodes) {
  return accuracy(preds, g.labels, nodes);
}

std::map<Split, double> split_accuracies(std::span<const int> preds, const GraphBundle& g, const DegreeSplits& splits) {
  std::map<Split, double> out;
  for (Split s : kAllSplits) {
    const auto test = splits.parts(s).test;
    if (!test.empty()) out[s] = accuracy(preds, g, test);
  }
  return out;
}

namespace {

double mean_reciprocal_rank(std::span<const RankQuery> queries, bool pessimistic) {
  if (queries.empty()) throw InvalidInput("mrr: empty query list");
  double total = 0.0;
  for (const auto& q : queries) {
    if (q.negatives.empty()) throw InvalidInput("mrr: query without negatives");
    std::size_t above = 0;
    for (double s : q.negatives) above += (pessimistic ? s >= q.positive : s > q.positive) ? 1 : 0;
    total += 1.0 / static_cast<double>(1 + above);
  }
  return total / static_cast<double>(queries.size());
}

}  // namespace

double mrr(std::span<const RankQuery> queries) { return mean_reciprocal_rank(queries, true); }
double mrr_optimistic(std::span<const RankQuery> queries) { return mean_reciprocal_rank(queries, false); }

}  // namespace coldbrew
