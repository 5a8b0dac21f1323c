#include "coldbrew/fcr.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace coldbrew {

double compute_fcr(double z_gnn, double z_mlp, double z_lp) {
  const double d_mlp = z_gnn - z_mlp;
  const double d_lp = z_gnn - z_lp;
  auto degenerate = [&]() {
    return DegenerateFcr("degenerate FCR for z_gnn=" + format_number(z_gnn) + " z_mlp=" + format_number(z_mlp) +
                         " z_lp=" + format_number(z_lp));
  };
  if (z_mlp <= z_gnn) {
    const double denom = d_mlp + d_lp;
    if (!(denom > 0.0)) throw degenerate();
    return d_lp / denom * 100.0;
  }
  const double denom = std::abs(d_mlp) + d_lp;
  if (d_lp < 0.0 || !(denom > 0.0)) throw degenerate();
  return 100.0 + std::abs(d_mlp) / denom * 100.0;
}

std::string fcr_verdict(double fcr) {
  if (fcr < 50.0) return "graph-structure dominant";
  if (fcr < 100.0) return "feature dominant";
  return "aggregation harmful";
}

std::vector<std::size_t> budget_subset(std::size_t space_size, std::size_t budget, std::uint64_t seed) {
  std::vector<std::size_t> idx(space_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (budget == 0 || budget >= space_size) return idx;
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(budget);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<TeacherConfig> gcn_space(const TeacherConfig& base) {
  std::vector<TeacherConfig> out;
  for (int layers : {2, 4, 8, 16, 32, 64})
    for (bool se : {false, true})
      for (Residual r : {Residual::none, Residual::last, Residual::initial, Residual::dense, Residual::jumping})
        for (NormKind n : {NormKind::none, NormKind::batch, NormKind::pair, NormKind::node, NormKind::mean}) {
          TeacherConfig c = base;
          c.num_layers = layers;
          c.use_se = se;
          c.shared_bias = false;
          c.residual = r;
          c.norm = n;
          out.push_back(c);
        }
  return out;
}

std::vector<MlpConfig> mlp_space(const MlpConfig& base) {
  const OptimizerConfig opts[] = {{OptimizerKind::adam, 0.001}, {OptimizerKind::adam, 0.005},
                                  {OptimizerKind::adam, 0.02}, {OptimizerKind::sgd, 0.005}};
  std::vector<MlpConfig> out;
  for (int layers : {2, 8, 16, 32})
    for (Eigen::Index dim : {128, 256})
      for (const auto& o : opts) {
        MlpConfig c = base;
        c.hidden_layers = layers;
        c.hidden_dim = dim;
        c.optimizer.kind = o.kind;
        c.optimizer.learning_rate = o.learning_rate;
        out.push_back(c);
      }
  return out;
}

std::vector<LpConfig> lp_space() {
  std::vector<LpConfig> out;
  for (int t : {10, 20, 50, 100, 200})
    for (LpMatrix m : {LpMatrix::adjacency, LpMatrix::laplacian})
      for (double a : {0.01, 0.1, 0.5, 0.9, 0.99}) out.push_back({t, m, a});
  return out;
}

template <typename Config>
void write_trials_csv(const std::vector<Trial<Config>>& trials, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  const KeyValues header = trials.empty() ? Config{}.describe() : trials.front().config.describe();
  for (const auto& [k, v] : header) out << k << ',';
  out << "val,test,status\n";
  for (const auto& t : trials) {
    for (const auto& [k, v] : t.config.describe()) out << v << ',';
    if (t.diverged) {
      out << "nan,nan,diverged\n";
    } else {
      out << format_number(t.scores.val) << ',' << format_number(t.scores.test) << ",ok\n";
    }
  }
}

template void write_trials_csv(const std::vector<Trial<TeacherConfig>>&, const std::filesystem::path&);
template void write_trials_csv(const std::vector<Trial<MlpConfig>>&, const std::filesystem::path&);
template void write_trials_csv(const std::vector<Trial<LpConfig>>&, const std::filesystem::path&);

void write_fcr_report(const FcrReport& r, const std::filesystem::path& path) {
  KeyValues kv{{"z_gnn", format_number(r.z_gnn)},
               {"z_mlp", format_number(r.z_mlp)},
               {"z_lp", format_number(r.z_lp)},
               {"delta_mlp", format_number(r.delta_mlp)},
               {"delta_lp", format_number(r.delta_lp)},
               {"fcr", format_number(r.fcr)},
               {"beta", format_number(r.beta)},
               {"verdict", r.verdict},
               {"head_minus_tail", format_number(r.head_minus_tail)},
               {"head_minus_isolation", format_number(r.head_minus_isolation)}};
  for (const auto& [k, v] : r.best_gnn_config) kv.emplace_back("best_gnn." + k, v);
  for (const auto& [k, v] : r.best_mlp_config) kv.emplace_back("best_mlp." + k, v);
  for (const auto& [k, v] : r.best_lp_config) kv.emplace_back("best_lp." + k, v);
  write_key_values(path, kv);
}

}  // namespace coldbrew
