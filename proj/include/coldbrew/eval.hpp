#pragma once

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "coldbrew/baselines.hpp"
#include "coldbrew/metrics.hpp"
#include "coldbrew/student.hpp"
#include "coldbrew/teacher.hpp"

namespace coldbrew {

// ---------------------------------------------------------------- link prediction

struct LinkConfig {
  Eigen::Index embed_dim = 64;
  OptimizerConfig optimizer{OptimizerKind::adam, 0.01};
  int max_epochs = 200;
  /// Eval candidates per positive edge.
  int num_negatives = 100;
  /// Dropout of the student's second stage under the link objective.
  double student_dropout = 0.0;

  KeyValues describe() const;
};

enum class LinkModel { gcn, gcn_se, student };

std::string to_string(LinkModel m);
LinkModel parse_link_model(const std::string& text);

/// One evaluation query: an isolation node, its removed true neighbor and
/// sampled non-neighbors of the source in the original graph.
struct LinkCandidate {
  NodeId src;
  NodeId pos;
  NodeList negatives;
};

/// Queries for every removed edge endpoint that is an isolation node. Depends
/// only on the graph, the splits and the seed, so all models face the same
/// candidates.
std::vector<LinkCandidate> link_candidates(const GraphBundle& post_removal, const DegreeSplits& splits,
                                           int num_negatives, std::uint64_t seed);

/// Ranks by the logit z_i . z_j, which orders pairs like sigmoid(z_i . z_j)
/// without saturating to ties.
template <typename Scalar>
std::vector<RankQuery> score_candidates(const Matrix<Scalar>& z, const std::vector<LinkCandidate>& candidates) {
  std::vector<RankQuery> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    RankQuery q;
    q.positive = static_cast<double>(z.row(c.src).dot(z.row(c.pos)));
    for (NodeId u : c.negatives) q.negatives.push_back(static_cast<double>(z.row(c.src).dot(z.row(u))));
    out.push_back(std::move(q));
  }
  return out;
}

/// Each training edge as a positive plus one uniformly drawn non-edge.
std::vector<LabeledPair> sample_link_pairs(const CsrAdjacency& graph, const std::vector<Edge>& positives, Rng& rng);

/// Embedding of every node recorded on a tape.
template <typename Scalar>
using Encoder = std::function<Var(Tape<Scalar>&, bool training, Rng*)>;

/// Per-column zero mean and unit variance; constant columns become zero.
template <typename Scalar>
Matrix<Scalar> standardize_columns(const Matrix<Scalar>& m) {
  const RowVector<Scalar> mean = m.colwise().mean();
  Matrix<Scalar> out = m.rowwise() - mean;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const Scalar sd = std::sqrt(out.col(j).squaredNorm() / static_cast<Scalar>(out.rows()));
    if (sd > Scalar(1e-8)) out.col(j) /= sd;
  }
  return out;
}

/// Adds parameter penalties to a recorded loss.
template <typename Scalar>
using Penalty = std::function<Var(Tape<Scalar>&, Var)>;

/// Logistic link training over the edges of `graph`, negatives resampled each
/// epoch. Keeps the parameters of the epoch with the lowest training loss.
template <typename Scalar>
FitResult train_link(const ParameterRefs<Scalar>& params, const Encoder<Scalar>& encode, const CsrAdjacency& graph,
                     const LinkConfig& cfg, std::uint64_t seed, const Penalty<Scalar>& penalty = {}) {
  const auto positives = graph.undirected_edges();
  if (positives.empty()) throw InvalidInput("link prediction: graph has no edges");
  FitOptions opts{cfg.optimizer, cfg.max_epochs, cfg.max_epochs, seed};
  double last_loss = 0.0;
  auto loss = [&](Tape<Scalar>& t, int, Rng& rng) {
    const auto pairs = sample_link_pairs(graph, positives, rng);
    Var l = pair_logistic_loss(t, encode(t, true, &rng), std::span<const LabeledPair>(pairs));
    if (penalty) l = penalty(t, l);
    last_loss = static_cast<double>(t.scalar(l));
    return l;
  };
  return fit<Scalar>(params, opts, loss, [&]() { return Score(-last_loss); });
}

struct LinkRun {
  LinkModel model = LinkModel::gcn;
  double mrr = 0.0;
  std::size_t num_queries = 0;
  FitResult fit;
};

/// Trains a link encoder on the post-removal graph and scores the removed
/// isolation edges. The student variant distills a link-trained SE teacher
/// and trains its second stage with the link loss on all training edges.
template <typename Scalar>
LinkRun train_link_predictor(LinkModel kind, const GraphBundle& g, const DegreeSplits& splits,
                             const TeacherConfig& teacher_cfg, const StudentConfig& student_cfg,
                             const LinkConfig& cfg, std::uint64_t seed, std::uint64_t candidate_seed) {
  const auto candidates = link_candidates(g, splits, cfg.num_negatives, candidate_seed);
  if (candidates.empty()) throw InvalidInput("link prediction: no removed isolation edges to evaluate");
  const auto a = normalized_adjacency<Scalar>(g.adjacency, teacher_cfg.self_loops);
  const Matrix<Scalar> x = g.features.cast<Scalar>();
  LinkRun run;
  run.model = kind;

  TeacherConfig tc = teacher_cfg;
  tc.use_se = kind != LinkModel::gcn;
  tc.shared_bias = false;
  Rng init(seed);
  TeacherModel<Scalar> enc(tc, g.num_nodes(), g.feature_dim(), cfg.embed_dim, init);
  auto gcn_encode = [&](Tape<Scalar>& t, bool training, Rng* rng) {
    return enc.forward(t, a.matrix, x, training, rng).logits;
  };
  auto se_penalty = [&](Tape<Scalar>& t, Var loss) {
    for (auto& e : enc.embeddings())
      loss = add(t, loss, scale(t, sum_squares(t, t.leaf(e)), static_cast<Scalar>(tc.eta)));
    return loss;
  };
  run.fit = train_link<Scalar>(enc.parameters(), gcn_encode, g.adjacency, cfg, seed + 1, se_penalty);
  enc.set_trained();
  if (kind != LinkModel::student) {
    const auto queries = score_candidates(enc.predict(a.matrix, x), candidates);
    run.mrr = mrr(queries);
    run.num_queries = queries.size();
    return run;
  }

  auto bank = export_embedding_bank(enc, g, student_cfg.bank_mode);
  NodeList non_isolated;
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    if (!std::binary_search(splits.isolation.begin(), splits.isolation.end(), v)) non_isolated.push_back(v);
  Mlp<Scalar> xi1 = train_xi1(g, bank, non_isolated, splits, student_cfg.xi1, seed + 2);
  const auto cache = precompute_topk(xi1.predict(x), bank.matrix, student_cfg.k, student_cfg.cache_budget_bytes);
  Matrix<Scalar> e_tilde = virtual_embeddings(cache, bank.matrix);
  if (student_cfg.zero_virtual) e_tilde.setZero();
  Matrix<Scalar> input = join_features(x, e_tilde);
  // dot-product scores are scale sensitive; give every input column unit spread
  input = standardize_columns(input);
  Rng rng(seed + 3);
  Mlp<Scalar> xi2(input.cols(), cfg.embed_dim, student_cfg.xi2.hidden_layers, student_cfg.xi2.hidden_dim,
                  cfg.student_dropout, rng, "xi2");
  auto mlp_encode = [&](Tape<Scalar>& t, bool training, Rng* r) { return xi2.forward(t, t.constant(input), training, r); };
  run.fit = train_link<Scalar>(xi2.parameters(), mlp_encode, g.adjacency, cfg, seed + 4);
  const auto queries = score_candidates(xi2.predict(input), candidates);
  run.mrr = mrr(queries);
  run.num_queries = queries.size();
  return run;
}

// ---------------------------------------------------------------- comparison

enum class ModelKind { gcn, gcn_se, mlp, sage, lp, student };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& text);

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::gcn;
  TeacherConfig teacher;
  MlpConfig mlp;
  SageConfig sage;
  LpConfig lp;
  StudentConfig student;

  KeyValues describe() const;
  std::string config_hash() const;
};

/// Named specs: gcn (plain, 2 layers), gcn_se, mlp, sage, lp, student,
/// gcn64 and gcn_se64.
ModelSpec model_spec(const std::string& name, const TeacherConfig& teacher_base);

struct EvalResult {
  std::string model;
  Split split = Split::overall;
  std::string metric = "accuracy";
  double value = 0.0;
  std::size_t num_eval_nodes = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Test accuracy of one trained model on every split.
template <typename Scalar>
std::vector<EvalResult> evaluate_spec(const GraphBundle& g, const DegreeSplits& splits, const ModelSpec& spec,
                                      std::uint64_t seed) {
  std::vector<int> preds;
  switch (spec.kind) {
    case ModelKind::gcn:
    case ModelKind::gcn_se: {
      TeacherConfig c = spec.teacher;
      c.use_se = spec.kind == ModelKind::gcn_se;
      preds = train_teacher<Scalar>(g, splits, c, seed).predictions;
      break;
    }
    case ModelKind::mlp:
      preds = train_simple_mlp<Scalar>(g, splits, spec.mlp, seed).predictions;
      break;
    case ModelKind::sage:
      preds = train_sage_mean<Scalar>(g, splits, spec.sage, seed).predictions;
      break;
    case ModelKind::lp:
      preds = run_label_propagation(g, splits, spec.lp).predictions;
      break;
    case ModelKind::student: {
      auto teacher = train_teacher<Scalar>(g, splits, spec.teacher, seed);
      auto bank = export_embedding_bank(teacher.model, g, spec.student.bank_mode);
      preds = train_student<Scalar>(g, splits, std::move(bank), spec.student, seed + 17).predictions;
      break;
    }
  }
  std::vector<EvalResult> out;
  for (Split s : kAllSplits) {
    const auto test = splits.parts(s).test;
    if (test.empty()) continue;
    out.push_back({spec.name, s, "accuracy", accuracy(preds, g, test), test.size(), seed, spec.config_hash()});
  }
  return out;
}

/// Aggregated row of the results CSV.
struct ResultRow {
  std::string model;
  std::string split;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
  std::size_t seeds = 0;
  std::string config_hash;
};

/// Mean and sample standard deviation per (model, split, metric), in first
/// appearance order.
std::vector<ResultRow> aggregate(const std::vector<EvalResult>& results);

/// Trains every spec for every seed on `workers` threads. The output order
/// follows (spec, seed) order regardless of completion order.
template <typename Scalar>
std::vector<EvalResult> run_comparison(const GraphBundle& g, const DegreeSplits& splits,
                                       const std::vector<ModelSpec>& specs, const std::vector<std::uint64_t>& seeds,
                                       int workers) {
  const std::size_t n = specs.size() * seeds.size();
  std::vector<std::vector<EvalResult>> slots(n);
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = evaluate_spec<Scalar>(g, splits, specs[i / seeds.size()], seeds[i % seeds.size()]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min<int>(workers, static_cast<int>(n)); ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<EvalResult> out;
  for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

/// Columns: model, split, metric, mean, std, seeds, config_hash.
void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
/// Throws InvalidInput on a header or column-count mismatch.
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// Pools rows sharing (model, split, metric, config_hash): seed counts add,
/// means combine weighted by seeds and the spread includes the between-file
/// variance.
std::vector<ResultRow> merge_results(const std::vector<ResultRow>& rows);

/// Aligned text, one section per metric.
std::string format_table(const std::vector<ResultRow>& rows);

}  // namespace coldbrew
