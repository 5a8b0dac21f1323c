#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coldbrew/baselines.hpp"
#include "coldbrew/checkpoint.hpp"
#include "coldbrew/eval.hpp"
#include "coldbrew/fcr.hpp"
#include "coldbrew/graph.hpp"
#include "coldbrew/io.hpp"
#include "coldbrew/splits.hpp"
#include "coldbrew/student.hpp"
#include "coldbrew/teacher.hpp"

#ifndef COLDBREW_DEFAULT_FIXTURES
#define COLDBREW_DEFAULT_FIXTURES "tests/fixtures"
#endif

namespace fs = std::filesystem;
using namespace coldbrew;

namespace {

constexpr int kUsageError = 2;
constexpr int kNumericalError = 3;

struct Common {
  std::string dataset;
  std::string out = "out";
  std::uint64_t seed = 0;
  int workers = 1;
  std::string precision = "f32";
};

struct TeacherFlags {
  TeacherConfig cfg;
  std::string optimizer = "adam:0.005";
  double weight_decay = 5e-4;

  void add(CLI::App* sub) {
    sub->add_option("--layers", cfg.num_layers, "Number of GCN layers")->capture_default_str();
    sub->add_option("--hidden", cfg.hidden_dim, "Hidden width")->capture_default_str();
    sub->add_option("--se", cfg.use_se, "Use structural embeddings")->capture_default_str();
    sub->add_option("--residual", residual, "none|last|initial|dense|jumping")->capture_default_str();
    sub->add_option("--norm", norm, "none|batch|pair|node|mean")->capture_default_str();
    sub->add_option("--dropout", cfg.dropout)->capture_default_str();
    sub->add_option("--drop-edge", cfg.drop_edge)->capture_default_str();
    sub->add_option("--eta", cfg.eta, "Structural-embedding penalty")->capture_default_str();
    sub->add_option("--self-loops", cfg.self_loops)->capture_default_str();
    sub->add_option("--optimizer", optimizer, "adam:LR or sgd:LR")->capture_default_str();
    sub->add_option("--weight-decay", weight_decay)->capture_default_str();
    sub->add_option("--epochs", cfg.max_epochs)->capture_default_str();
    sub->add_option("--patience", cfg.patience)->capture_default_str();
  }

  TeacherConfig resolve() const {
    TeacherConfig c = cfg;
    c.residual = parse_residual(residual);
    c.norm = parse_norm_kind(norm);
    c.optimizer = parse_optimizer(optimizer);
    c.optimizer.weight_decay = weight_decay;
    c.validate();
    return c;
  }

  std::string residual = "none";
  std::string norm = "pair";
};

struct MlpFlags {
  MlpConfig cfg;
  std::string optimizer = "adam:0.001";
  double weight_decay = 5e-4;
  std::string prefix;

  void add(CLI::App* sub, const std::string& p) {
    prefix = p;
    sub->add_option("--" + p + "hidden-layers", cfg.hidden_layers)->capture_default_str();
    sub->add_option("--" + p + "hidden", cfg.hidden_dim)->capture_default_str();
    sub->add_option("--" + p + "optimizer", optimizer)->capture_default_str();
    sub->add_option("--" + p + "weight-decay", weight_decay)->capture_default_str();
    sub->add_option("--" + p + "dropout", cfg.dropout)->capture_default_str();
    sub->add_option("--" + p + "epochs", cfg.max_epochs)->capture_default_str();
    sub->add_option("--" + p + "patience", cfg.patience)->capture_default_str();
  }

  MlpConfig resolve() const {
    MlpConfig c = cfg;
    c.optimizer = parse_optimizer(optimizer);
    c.optimizer.weight_decay = weight_decay;
    c.validate();
    return c;
  }
};

fs::path fixtures_dir() {
  if (const char* env = std::getenv("COLDBREW_FIXTURES"); env != nullptr && *env != '\0') return env;
  return COLDBREW_DEFAULT_FIXTURES;
}

/// A path as given, or a fixture name under the fixture directory.
fs::path resolve_dataset(const std::string& dataset) {
  if (dataset.empty()) throw InvalidInput("--dataset is required");
  if (fs::exists(dataset)) return dataset;
  const fs::path fixture = fixtures_dir() / dataset;
  if (fs::exists(fixture)) return fixture;
  throw InvalidInput("dataset not found: " + dataset + " (also looked in " + fixtures_dir().string() + ")");
}

void echo_config(const CLI::App& app, const fs::path& out) {
  fs::create_directories(out);
  std::ofstream f(out / "config.echo.ini", std::ios::binary);
  f << app.config_to_str(true, false);
}

/// Loads the bundle and its splits; the graph returned has the isolation
/// edges removed.
std::pair<GraphBundle, DegreeSplits> load_graph_and_splits(const std::string& dataset, const std::string& splits_dir) {
  const GraphBundle original = load_bundle(resolve_dataset(dataset));
  if (splits_dir.empty()) throw InvalidInput("--splits is required (run the splits command first)");
  DegreeSplits s = load_splits(splits_dir);
  return {apply_removal(original, s), std::move(s)};
}

void write_teacher_meta(const fs::path& dir, const TeacherConfig& cfg, NodeId n, Eigen::Index in, Eigen::Index out) {
  KeyValues kv = cfg.describe();
  kv.emplace_back("num_nodes", std::to_string(n));
  kv.emplace_back("in_dim", std::to_string(in));
  kv.emplace_back("out_dim", std::to_string(out));
  write_key_values(dir / "teacher.meta", kv);
}

template <typename Scalar>
TeacherModel<Scalar> load_teacher(const fs::path& dir) {
  auto kv = read_key_values(dir / "teacher.meta");
  const NodeId n = static_cast<NodeId>(std::stol(kv.at("num_nodes")));
  const Eigen::Index in = std::stol(kv.at("in_dim"));
  const Eigen::Index out = std::stol(kv.at("out_dim"));
  kv.erase("num_nodes");
  kv.erase("in_dim");
  kv.erase("out_dim");
  TeacherConfig cfg;
  cfg.apply(kv);
  Rng rng(0);
  TeacherModel<Scalar> m(cfg, n, in, out, rng);
  assign_tensors(read_checkpoint(dir / "teacher.ckpt"), m.parameters());
  m.set_trained();
  return m;
}

void write_results(const std::vector<EvalResult>& results, const fs::path& out) {
  const auto rows = aggregate(results);
  write_results_csv(rows, out / "results.csv");
  std::cout << format_table(rows);
}

std::vector<EvalResult> report_results(const TrainReport& r, const GraphBundle& g, const DegreeSplits& splits,
                                       const std::string& hash) {
  std::vector<EvalResult> out;
  for (const auto& [s, acc] : r.test_accuracy)
    out.push_back({r.model, s, "accuracy", acc, splits.parts(s).test.size(), r.seed, hash});
  (void)g;
  return out;
}

std::string hash_of(const KeyValues& kv) {
  std::string text;
  for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
  return hash_text(text);
}

template <typename Scalar>
Matrix<Scalar> read_feature_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("missing file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> r;
    for (const auto& c : split_csv_line(line)) r.push_back(std::stod(c));
    if (!rows.empty() && r.size() != rows.front().size()) throw InvalidInput("ragged features CSV");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw InvalidInput("empty features CSV");
  Matrix<Scalar> x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<Scalar>(rows[i][j]);
  if (!x.allFinite()) throw InvalidInput("non-finite feature value");
  return x;
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, int count) {
  if (count < 1) throw InvalidInput("--seeds must be >= 1");
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(first + static_cast<std::uint64_t>(i));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cold-start node prediction: SE-GCN teacher, MLP student, baselines and FCR analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI config file; command-line flags take precedence");

  Common common;
  app.add_option("--dataset", common.dataset, "Bundle directory or fixture name");
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_option("--seed", common.seed)->capture_default_str();
  app.add_option("--workers", common.workers)->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--precision", common.precision)->capture_default_str()->check(CLI::IsMember({"f32", "f64"}));

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a clustered power-law graph bundle");
  int synth_n = 200;
  double synth_exponent = 2.5;
  double synth_noise = 0.1;
  int synth_clusters = 2;
  std::string synth_encoding = "csv";
  std::string synth_name = "synth";
  SynthOptions synth_opts;
  synth->add_option("--n", synth_n)->capture_default_str();
  synth->add_option("--exponent", synth_exponent)->capture_default_str();
  synth->add_option("--noise", synth_noise, "Fraction of cross-cluster edges")->capture_default_str();
  synth->add_option("--clusters", synth_clusters)->capture_default_str();
  synth->add_option("--feature-dim", synth_opts.feature_dim)->capture_default_str();
  synth->add_option("--mean-degree", synth_opts.mean_degree)->capture_default_str();
  synth->add_option("--encoding", synth_encoding)->capture_default_str()->check(CLI::IsMember({"csv", "bin"}));
  synth->add_option("--name", synth_name)->capture_default_str();

  // splits
  auto* splits_cmd = app.add_subcommand("splits", "Build head/tail/isolation splits");
  double head_frac = 0.1, tail_frac = 0.1, iso_frac = 0.1;
  splits_cmd->add_option("--head", head_frac)->capture_default_str();
  splits_cmd->add_option("--tail", tail_frac)->capture_default_str();
  splits_cmd->add_option("--iso", iso_frac)->capture_default_str();

  std::string splits_dir;
  // train-teacher
  auto* teacher_cmd = app.add_subcommand("train-teacher", "Train the SE-GCN teacher");
  TeacherFlags teacher_flags;
  teacher_cmd->add_option("--splits", splits_dir, "Directory written by the splits command");
  teacher_flags.add(teacher_cmd);

  // baseline
  auto* baseline_cmd = app.add_subcommand("baseline", "Train a baseline model");
  std::string baseline_model = "mlp";
  MlpFlags baseline_mlp;
  LpConfig lp_cfg;
  std::string lp_matrix = "laplacian";
  SageConfig sage_cfg;
  TeacherFlags baseline_gcn;
  baseline_cmd->add_option("--splits", splits_dir);
  baseline_cmd->add_option("--model", baseline_model)->capture_default_str()->check(
      CLI::IsMember({"mlp", "lp", "sage", "gcn"}));
  baseline_mlp.add(baseline_cmd, "mlp-");
  baseline_cmd->add_option("--lp-props", lp_cfg.num_props)->capture_default_str();
  baseline_cmd->add_option("--lp-matrix", lp_matrix)->capture_default_str();
  baseline_cmd->add_option("--lp-alpha", lp_cfg.alpha)->capture_default_str();
  baseline_cmd->add_option("--sage-hidden", sage_cfg.hidden_dim)->capture_default_str();
  baseline_cmd->add_option("--sage-epochs", sage_cfg.max_epochs)->capture_default_str();
  baseline_gcn.cfg.use_se = false;
  baseline_gcn.add(baseline_cmd);

  // distill
  auto* distill_cmd = app.add_subcommand("distill", "Train the two-stage student from a teacher");
  std::string teacher_dir;
  StudentConfig student_cfg;
  std::string bank_mode = "concat";
  MlpFlags xi1_flags, xi2_flags;
  xi1_flags.weight_decay = 0.0;
  xi1_flags.cfg.dropout = 0.0;
  distill_cmd->add_option("--splits", splits_dir);
  distill_cmd->add_option("--teacher", teacher_dir, "Directory written by train-teacher");
  distill_cmd->add_option("--k", student_cfg.k, "Virtual neighborhood size")->capture_default_str();
  distill_cmd->add_option("--bank-mode", bank_mode)->capture_default_str()->check(CLI::IsMember({"final", "concat"}));
  distill_cmd->add_flag("--zero-virtual", student_cfg.zero_virtual, "Ablation: drop the virtual neighborhood");
  distill_cmd->add_flag("--widen", student_cfg.widen_xi2, "Train the second stage on all non-isolated train nodes too");
  xi1_flags.add(distill_cmd, "xi1-");
  xi2_flags.add(distill_cmd, "xi2-");

  // linkpred
  auto* link_cmd = app.add_subcommand("linkpred", "Link prediction MRR on the isolation split");
  std::string link_model = "student";
  int link_seeds = 1;
  LinkConfig link_cfg;
  TeacherFlags link_teacher;
  link_cmd->add_option("--splits", splits_dir);
  link_cmd->add_option("--model", link_model)->capture_default_str()->check(
      CLI::IsMember({"gcn", "gcn_se", "student"}));
  link_cmd->add_option("--seeds", link_seeds)->capture_default_str();
  link_cmd->add_option("--embed-dim", link_cfg.embed_dim)->capture_default_str();
  link_cmd->add_option("--link-epochs", link_cfg.max_epochs)->capture_default_str();
  link_cmd->add_option("--negatives", link_cfg.num_negatives)->capture_default_str();
  link_cmd->add_option("--k", student_cfg.k)->capture_default_str();
  link_teacher.add(link_cmd);

  // fcr
  auto* fcr_cmd = app.add_subcommand("fcr", "Grid-search MLP, LP and GCN and report FCR");
  std::size_t budget = 3;
  bool full_grid = false;
  TeacherFlags fcr_teacher;
  fcr_cmd->add_option("--splits", splits_dir);
  fcr_cmd->add_option("--budget", budget, "Trials per submodule")->capture_default_str();
  fcr_cmd->add_flag("--full", full_grid, "Search the full grids");
  fcr_cmd->add_option("--epochs", fcr_teacher.cfg.max_epochs, "Epoch cap for GCN and MLP trials")->capture_default_str();
  fcr_cmd->add_option("--patience", fcr_teacher.cfg.patience)->capture_default_str();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Compare models over seeds, or run student inference");
  std::string models = "gcn,gcn_se,mlp,student";
  int eval_seeds = 5;
  std::string student_dir, features_csv;
  TeacherFlags eval_teacher;
  eval_cmd->add_option("--splits", splits_dir);
  eval_cmd->add_option("--models", models, "Comma-separated: gcn,gcn_se,mlp,sage,lp,student,gcn64,gcn_se64")
      ->capture_default_str();
  eval_cmd->add_option("--seeds", eval_seeds)->capture_default_str();
  eval_cmd->add_option("--student", student_dir, "Student directory for inference");
  eval_cmd->add_option("--features", features_csv, "Features CSV for student inference");
  eval_cmd->add_option("--k", student_cfg.k)->capture_default_str();
  eval_teacher.add(eval_cmd);

  // report
  auto* report_cmd = app.add_subcommand("report", "Merge results CSVs into comparison tables");
  std::vector<std::string> result_paths;
  report_cmd->add_option("inputs", result_paths, "Results CSV files or directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageError;
  }

  const fs::path out = common.out;
  const bool f64 = common.precision == "f64";
  try {
    echo_config(app, out);

    if (synth->parsed()) {
      GraphBundle g = synth_power_law(synth_n, synth_exponent, synth_noise, synth_clusters, common.seed, synth_opts);
      g.name = synth_name;
      save_bundle(g, out, synth_encoding == "csv" ? FeatureEncoding::csv : FeatureEncoding::bin);
      std::cout << "wrote " << out.string() << ": N=" << g.num_nodes() << " edges=" << g.adjacency.num_edges()
                << " C=" << g.num_classes << "\n";
      return 0;
    }

    if (splits_cmd->parsed()) {
      LoadStats stats;
      const GraphBundle g = load_bundle(resolve_dataset(common.dataset), &stats);
      const auto result = make_degree_splits(g, head_frac, tail_frac, iso_frac, common.seed);
      save_splits(result.splits, out);
      std::map<std::size_t, std::pair<std::size_t, std::size_t>> hist;
      for (NodeId v = 0; v < g.num_nodes(); ++v) {
        ++hist[g.adjacency.degree(v)].first;
        ++hist[result.post_removal.adjacency.degree(v)].second;
      }
      std::ofstream h(out / "degree_histogram.csv", std::ios::binary);
      h << "degree,original,post_removal\n";
      for (const auto& [d, c] : hist) h << d << ',' << c.first << ',' << c.second << '\n';
      const auto& s = result.splits;
      std::cout << "head=" << s.head.size() << " tail=" << s.tail.size() << " isolation=" << s.isolation.size()
                << " middle=" << s.middle.size() << " removed_edges=" << s.removed_edges.size()
                << " self_loops_dropped=" << stats.self_loops_dropped
                << " duplicates_dropped=" << stats.duplicates_dropped << "\n";
      return 0;
    }

    if (report_cmd->parsed()) {
      std::vector<ResultRow> rows;
      for (const auto& p : result_paths) {
        if (fs::is_directory(p)) {
          std::vector<fs::path> files;
          for (const auto& entry : fs::recursive_directory_iterator(p))
            if (entry.path().filename() == "results.csv") files.push_back(entry.path());
          std::sort(files.begin(), files.end());
          for (const auto& f : files) {
            const auto more = read_results_csv(f);
            rows.insert(rows.end(), more.begin(), more.end());
          }
        } else {
          const auto more = read_results_csv(p);
          rows.insert(rows.end(), more.begin(), more.end());
        }
      }
      if (rows.empty()) throw InvalidInput("no results rows found");
      const auto merged = merge_results(rows);
      write_results_csv(merged, out / "merged.csv");
      std::cout << format_table(merged);
      return 0;
    }

    auto dispatch = [&](auto tag) -> int {
      using Scalar = decltype(tag);

      if (teacher_cmd->parsed()) {
        const TeacherConfig cfg = teacher_flags.resolve();
        const auto [g, s] = load_graph_and_splits(common.dataset, splits_dir);
        auto run = train_teacher<Scalar>(g, s, cfg, common.seed);
        write_checkpoint(out / "teacher.ckpt", to_tensors(run.model.parameters()));
        write_teacher_meta(out, cfg, g.num_nodes(), g.feature_dim(), g.num_classes);
        write_report(run.report, out);
        write_results(report_results(run.report, g, s, hash_of(cfg.describe())), out);
        return 0;
      }

      if (baseline_cmd->parsed()) {
        const auto [g, s] = load_graph_and_splits(common.dataset, splits_dir);
        TrainReport report;
        std::string hash;
        if (baseline_model == "mlp") {
          const MlpConfig c = baseline_mlp.resolve();
          Mlp<Scalar> net;
          report = train_simple_mlp<Scalar>(g, s, c, common.seed, &net).report;
          write_checkpoint(out / "mlp.ckpt", to_tensors(net.parameters()));
          hash = hash_of(c.describe());
        } else if (baseline_model == "lp") {
          LpConfig c = lp_cfg;
          c.matrix = parse_lp_matrix(lp_matrix);
          report = run_label_propagation(g, s, c).report;
          report.seed = common.seed;
          hash = hash_of(c.describe());
        } else if (baseline_model == "sage") {
          report = train_sage_mean<Scalar>(g, s, sage_cfg, common.seed).report;
          hash = hash_of(sage_cfg.describe());
        } else {
          TeacherConfig c = baseline_gcn.resolve();
          c.use_se = false;
          auto run = train_teacher<Scalar>(g, s, c, common.seed);
          write_checkpoint(out / "gcn.ckpt", to_tensors(run.model.parameters()));
          report = run.report;
          hash = hash_of(c.describe());
        }
        write_report(report, out);
        write_results(report_results(report, g, s, hash), out);
        return 0;
      }

      if (distill_cmd->parsed()) {
        if (teacher_dir.empty()) throw InvalidInput("distill requires --teacher");
        StudentConfig cfg = student_cfg;
        cfg.bank_mode = parse_bank_mode(bank_mode);
        cfg.xi1 = xi1_flags.resolve();
        cfg.xi2 = xi2_flags.resolve();
        const auto [g, s] = load_graph_and_splits(common.dataset, splits_dir);
        auto teacher = load_teacher<Scalar>(teacher_dir);
        if (teacher.num_nodes() != g.num_nodes() || teacher.in_dim() != g.feature_dim())
          throw InvalidInput("teacher checkpoint does not match the dataset");
        auto run = train_student<Scalar>(g, s, export_embedding_bank(teacher, g, cfg.bank_mode), cfg, common.seed);
        auto tensors = to_tensors(run.model.xi1.parameters());
        for (auto& t : to_tensors(run.model.xi2.parameters())) tensors.push_back(std::move(t));
        write_checkpoint(out / "student.ckpt", tensors);
        write_checkpoint(out / "bank.ckpt", {{"bank", run.model.bank.matrix.template cast<float>()}});
        KeyValues meta = cfg.describe();
        meta.emplace_back("in_dim", std::to_string(g.feature_dim()));
        meta.emplace_back("bank_dim", std::to_string(run.model.bank.matrix.cols()));
        meta.emplace_back("num_classes", std::to_string(g.num_classes));
        meta.emplace_back("bank_source", run.model.bank.source_hash);
        write_key_values(out / "student.meta", meta);
        write_report(run.report, out);
        write_results(report_results(run.report, g, s, hash_of(cfg.describe())), out);
        return 0;
      }

      if (link_cmd->parsed()) {
        const auto [g, s] = load_graph_and_splits(common.dataset, splits_dir);
        const TeacherConfig tc = link_teacher.resolve();
        std::vector<EvalResult> results;
        KeyValues desc = link_cfg.describe();
        for (const auto& [k, v] : tc.describe()) desc.emplace_back("teacher." + k, v);
        for (std::uint64_t seed : seed_list(common.seed, link_seeds)) {
          const auto r = train_link_predictor<Scalar>(parse_link_model(link_model), g, s, tc, student_cfg, link_cfg,
                                                      seed, common.seed);
          results.push_back({link_model, Split::isolation, "mrr", r.mrr, r.num_queries, seed, hash_of(desc)});
        }
        write_results(results, out);
        return 0;
      }

      if (fcr_cmd->parsed()) {
        const auto [g, s] = load_graph_and_splits(common.dataset, splits_dir);
        FcrOptions opts;
        const std::size_t b = full_grid ? 0 : budget;
        opts.gcn_budget = opts.mlp_budget = opts.lp_budget = b;
        opts.seed = common.seed;
        opts.workers = common.workers;
        opts.gcn_base.max_epochs = opts.mlp_base.max_epochs = fcr_teacher.cfg.max_epochs;
        opts.gcn_base.patience = opts.mlp_base.patience = fcr_teacher.cfg.patience;
        const auto run = fcr_pipeline<Scalar>(g, s, opts);
        write_fcr_report(run.report, out / "fcr_report.txt");
        write_trials_csv(run.gcn.trials, out / "trials_gcn.csv");
        write_trials_csv(run.mlp.trials, out / "trials_mlp.csv");
        write_trials_csv(run.lp.trials, out / "trials_lp.csv");
        const auto& r = run.report;
        std::cout << "z_gnn=" << r.z_gnn << " z_mlp=" << r.z_mlp << " z_lp=" << r.z_lp << "\nFCR=" << r.fcr
                  << "% beta=" << r.beta << "%\nverdict: " << r.verdict << "\n";
        return 0;
      }

      if (eval_cmd->parsed()) {
        if (!student_dir.empty()) {
          if (features_csv.empty()) throw InvalidInput("--student needs --features");
          const auto meta = read_key_values(fs::path(student_dir) / "student.meta");
          StudentModel<Scalar> m;
          Rng rng(0);
          const auto in = std::stol(meta.at("in_dim"));
          const auto bank_dim = std::stol(meta.at("bank_dim"));
          const auto classes = std::stol(meta.at("num_classes"));
          m.xi1 = Mlp<Scalar>(in, bank_dim, std::stoi(meta.at("xi1.hidden_layers")), std::stol(meta.at("xi1.hidden_dim")),
                              0.0, rng, "xi1");
          m.xi2 = Mlp<Scalar>(in + bank_dim, classes, std::stoi(meta.at("xi2.hidden_layers")),
                              std::stol(meta.at("xi2.hidden_dim")), 0.0, rng, "xi2");
          const auto tensors = read_checkpoint(fs::path(student_dir) / "student.ckpt");
          assign_tensors(tensors, m.xi1.parameters());
          assign_tensors(tensors, m.xi2.parameters());
          m.bank.matrix = read_checkpoint(fs::path(student_dir) / "bank.ckpt").at(0).data.template cast<Scalar>();
          m.bank.mode = parse_bank_mode(meta.at("bank_mode"));
          m.k = std::stol(meta.at("k"));
          m.zero_virtual = meta.at("zero_virtual") == "true";
          const Matrix<Scalar> x = read_feature_csv<Scalar>(features_csv);
          const Matrix<Scalar> p = m.infer(x);
          const auto pred = row_argmax(p);
          fs::create_directories(out);
          std::ofstream f(out / "predictions.csv", std::ios::binary);
          f << "node_id,argmax";
          for (Eigen::Index c = 0; c < p.cols(); ++c) f << ",p" << c;
          f << '\n';
          for (Eigen::Index i = 0; i < p.rows(); ++i) {
            f << i << ',' << pred[static_cast<std::size_t>(i)];
            for (Eigen::Index c = 0; c < p.cols(); ++c) f << ',' << format_number(static_cast<double>(p(i, c)));
            f << '\n';
          }
          std::cout << "wrote " << (out / "predictions.csv").string() << " (" << p.rows() << " rows)\n";
          return 0;
        }
        const auto [g, s] = load_graph_and_splits(common.dataset, splits_dir);
        const TeacherConfig tc = eval_teacher.resolve();
        std::vector<ModelSpec> specs;
        std::stringstream ss(models);
        std::string name;
        while (std::getline(ss, name, ',')) {
          if (name.empty()) continue;
          ModelSpec spec = model_spec(name, tc);
          spec.student.k = student_cfg.k;
          specs.push_back(spec);
        }
        if (specs.empty()) throw InvalidInput("--models is empty");
        write_results(run_comparison<Scalar>(g, s, specs, seed_list(common.seed, eval_seeds), common.workers), out);
        return 0;
      }
      throw InvalidInput("no command given");
    };
    return f64 ? dispatch(double{}) : dispatch(float{});
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const DegenerateFcr& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: malformed metadata (" << e.what() << ")\n";
    return kUsageError;
  }
}
