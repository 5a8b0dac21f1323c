#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "coldbrew/baselines.hpp"
#include "coldbrew/mlp.hpp"
#include "coldbrew/splits.hpp"
#include "coldbrew/teacher.hpp"

namespace coldbrew {

/// Feature contribution ratio in percent from GNN, MLP and LP accuracies.
/// Throws DegenerateFcr when the ratio is undefined.
double compute_fcr(double z_gnn, double z_mlp, double z_lp);

/// "graph-structure dominant" below 50, "feature dominant" in [50, 100),
/// "aggregation harmful" from 100 up.
std::string fcr_verdict(double fcr);

struct TrialScores {
  double val = 0.0;
  /// Overall test accuracy.
  double test = 0.0;
  std::map<Split, double> split_test;
};

template <typename Config>
struct Trial {
  Config config;
  TrialScores scores;
  bool diverged = false;
  std::string error;
};

template <typename Config>
struct GridResult {
  Config best;
  std::size_t best_index = 0;
  TrialScores best_scores;
  std::vector<Trial<Config>> trials;

  double z() const { return best_scores.test; }
};

/// Indices of the configurations a budgeted search visits, in grid order.
/// budget = 0 means the full grid.
std::vector<std::size_t> budget_subset(std::size_t space_size, std::size_t budget, std::uint64_t seed);

/// Runs `run` for each selected configuration on `workers` threads, selects
/// the best validation score (earliest in grid order on ties) and reports its
/// overall test accuracy as z. Trials are logged in grid order.
template <typename Config>
GridResult<Config> grid_search(const std::vector<Config>& space, std::size_t budget, std::uint64_t seed, int workers,
                               const std::function<TrialScores(const Config&, std::size_t)>& run) {
  if (space.empty()) throw InvalidInput("grid search: empty space");
  const auto picked = budget_subset(space.size(), budget, seed);
  std::vector<Trial<Config>> trials(picked.size());
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto work = [&]() {
    for (std::size_t i = next++; i < picked.size(); i = next++) {
      Trial<Config>& tr = trials[i];
      tr.config = space[picked[i]];
      try {
        tr.scores = run(tr.config, picked[i]);
      } catch (const DivergenceError& e) {
        tr.diverged = true;
        tr.error = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = picked.size();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(picked.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_threads; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  GridResult<Config> out;
  bool found = false;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].diverged) continue;
    if (!found || trials[i].scores.val > out.best_scores.val) {
      found = true;
      out.best = trials[i].config;
      out.best_index = picked[i];
      out.best_scores = trials[i].scores;
    }
  }
  if (!found) throw DivergenceError("all grid-search trials diverged", -1);
  out.trials = std::move(trials);
  return out;
}

/// Layers {2,4,8,16,32,64} x SE {off,on} x 5 residual kinds x 5 norms.
std::vector<TeacherConfig> gcn_space(const TeacherConfig& base);
/// Hidden layers {2,8,16,32} x width {128,256} x {Adam 0.001, 0.005, 0.02, SGD 0.005}.
std::vector<MlpConfig> mlp_space(const MlpConfig& base);
/// T {10,20,50,100,200} x {adjacency, laplacian} x alpha {0.01,0.1,0.5,0.9,0.99}.
std::vector<LpConfig> lp_space();

/// Trial log: config columns, then val and test.
template <typename Config>
void write_trials_csv(const std::vector<Trial<Config>>& trials, const std::filesystem::path& path);

struct FcrOptions {
  std::size_t gcn_budget = 0;
  std::size_t mlp_budget = 0;
  std::size_t lp_budget = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  TeacherConfig gcn_base;
  MlpConfig mlp_base;
  /// Replace the default grids when nonempty.
  std::vector<TeacherConfig> gcn_grid;
  std::vector<MlpConfig> mlp_grid;
  std::vector<LpConfig> lp_grid;
};

struct FcrReport {
  double z_gnn = 0.0;
  double z_mlp = 0.0;
  double z_lp = 0.0;
  double delta_mlp = 0.0;
  double delta_lp = 0.0;
  double fcr = 0.0;
  double beta = 0.0;
  std::string verdict;
  KeyValues best_gnn_config;
  KeyValues best_mlp_config;
  KeyValues best_lp_config;
  double head_minus_tail = 0.0;
  double head_minus_isolation = 0.0;
};

struct FcrRun {
  FcrReport report;
  GridResult<TeacherConfig> gcn;
  GridResult<MlpConfig> mlp;
  GridResult<LpConfig> lp;
};

/// Searches the three submodules on the post-removal graph `g`, then derives
/// FCR, beta and the head-tail / head-isolation gaps of the best GNN.
template <typename Scalar>
FcrRun fcr_pipeline(const GraphBundle& g, const DegreeSplits& splits, const FcrOptions& opts) {
  FcrRun run;
  run.gcn = grid_search<TeacherConfig>(
      opts.gcn_grid.empty() ? gcn_space(opts.gcn_base) : opts.gcn_grid, opts.gcn_budget, opts.seed, opts.workers, [&](const TeacherConfig& c, std::size_t) {
        const auto r = train_teacher<Scalar>(g, splits, c, opts.seed);
        return TrialScores{r.report.val_accuracy, r.report.test_accuracy.at(Split::overall), r.report.test_accuracy};
      });
  run.mlp = grid_search<MlpConfig>(
      opts.mlp_grid.empty() ? mlp_space(opts.mlp_base) : opts.mlp_grid, opts.mlp_budget, opts.seed + 1, opts.workers, [&](const MlpConfig& c, std::size_t) {
        const auto r = train_simple_mlp<Scalar>(g, splits, c, opts.seed);
        return TrialScores{r.report.val_accuracy, r.report.test_accuracy.at(Split::overall), r.report.test_accuracy};
      });
  run.lp = grid_search<LpConfig>(opts.lp_grid.empty() ? lp_space() : opts.lp_grid, opts.lp_budget, opts.seed + 2, opts.workers,
                                 [&](const LpConfig& c, std::size_t) {
                                   const auto r = run_label_propagation(g, splits, c);
                                   return TrialScores{r.report.val_accuracy, r.report.test_accuracy.at(Split::overall),
                                                      r.report.test_accuracy};
                                 });
  FcrReport& rep = run.report;
  rep.z_gnn = run.gcn.z();
  rep.z_mlp = run.mlp.z();
  rep.z_lp = run.lp.z();
  rep.delta_mlp = rep.z_gnn - rep.z_mlp;
  rep.delta_lp = rep.z_gnn - rep.z_lp;
  rep.fcr = compute_fcr(rep.z_gnn, rep.z_mlp, rep.z_lp);
  rep.verdict = fcr_verdict(rep.fcr);
  rep.beta = homophily_beta(g);
  rep.best_gnn_config = run.gcn.best.describe();
  rep.best_mlp_config = run.mlp.best.describe();
  rep.best_lp_config = run.lp.best.describe();
  const auto& acc = run.gcn.best_scores.split_test;
  auto get = [&acc](Split s) {
    const auto it = acc.find(s);
    return it == acc.end() ? 0.0 : it->second;
  };
  rep.head_minus_tail = get(Split::head) - get(Split::tail);
  rep.head_minus_isolation = get(Split::head) - get(Split::isolation);
  return run;
}

void write_fcr_report(const FcrReport& r, const std::filesystem::path& path);

}  // namespace coldbrew
