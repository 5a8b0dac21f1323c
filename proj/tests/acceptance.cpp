// Acceptance runner: one PASS/FAIL line per criterion. Pass criterion names to
// run a subset; with no arguments every criterion runs.

#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "coldbrew/eval.hpp"
#include "coldbrew/fcr.hpp"
#include "coldbrew/grad_check.hpp"
#include "helpers.hpp"

using namespace coldbrew;
using namespace coldbrew::test;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures.push_back(what);
    }
  }
  template <typename T>
  Outcome& note(const T& v) {
    detail << v;
    return *this;
  }
};

fs::path cora_dir() {
  const char* env = std::getenv("COLDBREW_FIXTURES");
  return (env != nullptr && *env != '\0' ? fs::path(env) : fixtures_dir()) / "cora";
}

/// Loads the Cora bundle or records why it is unavailable.
std::optional<GraphBundle> load_cora(Outcome& out) {
  const fs::path dir = cora_dir();
  if (!fs::exists(dir / "meta")) {
    out.require(false, "Cora fixture bundle not found at " + dir.string() +
                           " (set COLDBREW_FIXTURES to a directory containing cora/)");
    return std::nullopt;
  }
  GraphBundle g = load_bundle(dir);
  out.require(g.num_nodes() == 2708, "Cora bundle has N=" + std::to_string(g.num_nodes()) + ", expected 2708");
  return g;
}

std::string fmt(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

Var weighted_sum(Tape<double>& t, Var out, std::uint64_t seed) {
  Rng rng(seed + 999);
  const Matrix<double> w = random_matrix(t.value(out).cols(), 1, rng);
  return sum_squares(t, matmul(t, out, t.constant(w)));
}

// ---------------------------------------------------------------- criteria

void fcr_exactness(Outcome& out) {
  struct Case {
    double g, m, l, want, tol;
  };
  for (const Case& c : {Case{86.96, 69.02, 78.18, 32.86, 0.01}, Case{72.44, 56.59, 45.00, 63.39, 0.01},
                        Case{68.51, 58.65, 41.01, 73.61, 0.01}, Case{31.95, 38.51, 22.85, 141.89, 0.05}}) {
    const double f = compute_fcr(c.g, c.m, c.l);
    out.note(c.want == 32.86 ? "FCR " : ", ").note(fmt(f, 4));
    out.require(std::abs(f - c.want) <= c.tol, "FCR " + fmt(f, 4) + " vs " + fmt(c.want));
  }
}

void gradient_suite(Outcome& out) {
  double worst = 0.0;
  int checks = 0;
  auto check = [&](const LossClosure& f, const ParameterRefs<double>& ps) {
    worst = std::max(worst, grad_check(f, ps));
    ++checks;
  };
  const GraphBundle g = random_graph(6, 0.5, 3, 4, 12);
  const auto a = normalized_adjacency<double>(g.adjacency, true);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Eigen::Index cols = 2 + static_cast<Eigen::Index>(seed % 3);
    Parameter<double> p("p", random_matrix(6, cols, rng));
    Parameter<double> q("q", random_matrix(6, cols, rng));
    Parameter<double> w("w", random_matrix(cols, 3, rng));
    Parameter<double> r("r", random_matrix(1, cols, rng));
    Parameter<double> gamma("gamma", (random_matrix(1, cols, rng).array() + 1.5).matrix());
    Parameter<double> beta("beta", random_matrix(1, cols, rng));
    std::vector<int> labels(6);
    for (auto& y : labels) y = static_cast<int>(rng() % static_cast<std::uint64_t>(cols));
    const NodeList mask{0, 2, 4, 5};
    const Matrix<double> target = random_matrix(6, cols, rng);
    const std::vector<LabeledPair> pairs{{0, 1, true}, {1, 2, false}, {3, 5, true}, {4, 0, false}};
    check([&](Tape<double>& t) { return weighted_sum(t, matmul(t, t.leaf(p), t.leaf(w)), seed); }, {&p, &w});
    check([&](Tape<double>& t) { return weighted_sum(t, spmm(t, a.matrix, t.leaf(p)), seed); }, {&p});
    check([&](Tape<double>& t) { return weighted_sum(t, add(t, t.leaf(p), t.leaf(q)), seed); }, {&p, &q});
    check([&](Tape<double>& t) { return weighted_sum(t, add_row(t, t.leaf(p), t.leaf(r)), seed); }, {&p, &r});
    check([&](Tape<double>& t) { return weighted_sum(t, scale(t, t.leaf(p), -1.7), seed); }, {&p});
    check([&](Tape<double>& t) { return weighted_sum(t, relu(t, t.leaf(p)), seed); }, {&p});
    check([&](Tape<double>& t) {
      Rng drop(seed);
      return weighted_sum(t, dropout(t, t.leaf(p), 0.4, drop), seed);
    }, {&p});
    check([&](Tape<double>& t) { return weighted_sum(t, concat_cols(t, {t.leaf(p), t.leaf(q)}), seed); }, {&p, &q});
    check([&](Tape<double>& t) { return sum_squares(t, t.leaf(p)); }, {&p});
    check([&](Tape<double>& t) { return cross_entropy(t, t.leaf(p), std::span<const int>(labels), mask); }, {&p});
    check([&](Tape<double>& t) { return mse(t, t.leaf(p), target, mask); }, {&p});
    for (auto kind : {NormKind::pair, NormKind::node, NormKind::mean})
      check([&](Tape<double>& t) { return weighted_sum(t, normalize(t, t.leaf(p), kind), seed); }, {&p});
    check([&](Tape<double>& t) {
      return weighted_sum(t, normalize(t, t.leaf(p), NormKind::batch, t.leaf(gamma), t.leaf(beta)), seed);
    }, {&p, &gamma, &beta});
    check([&](Tape<double>& t) { return pair_logistic_loss(t, t.leaf(p), std::span<const LabeledPair>(pairs)); }, {&p});
  }
  const NodeList train{0, 2, 3, 5};
  for (auto residual : {Residual::none, Residual::last, Residual::initial, Residual::dense, Residual::jumping}) {
    for (auto norm : {NormKind::none, NormKind::batch, NormKind::pair, NormKind::node, NormKind::mean}) {
      TeacherConfig cfg;
      cfg.hidden_dim = 5;
      cfg.num_layers = 3;
      cfg.residual = residual;
      cfg.norm = norm;
      cfg.eta = 0.01;
      Rng rng(3);
      TeacherModel<double> m(cfg, 6, 4, 3, rng);
      Rng e(4);
      for (auto& emb : m.embeddings()) emb.value = random_matrix(emb.value.rows(), emb.value.cols(), e, 0.5);
      check([&](Tape<double>& t) {
        return teacher_loss(t, m, m.forward(t, a.matrix, g.features, false, nullptr).logits, g.labels, train);
      }, m.parameters());
    }
  }
  out.note(checks).note(" checks, max rel err ").note(worst);
  out.require(worst < 1e-4, "max relative error " + std::to_string(worst));
}

void se_init_equivalence(Outcome& out) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GraphBundle g = random_graph(25, 0.15, 4, 6, seed);
    const auto a = normalized_adjacency<double>(g.adjacency, true);
    for (auto residual : {Residual::none, Residual::last, Residual::initial, Residual::dense, Residual::jumping}) {
      for (int layers : {2, 4}) {
        TeacherConfig cfg;
        cfg.hidden_dim = 8;
        cfg.num_layers = layers;
        cfg.residual = residual;
        TeacherConfig plain = cfg;
        plain.use_se = false;
        Rng r1(seed);
        Rng r2(seed);
        TeacherModel<double> se(cfg, 25, 6, 4, r1);
        TeacherModel<double> gcn(plain, 25, 6, 4, r2);
        worst = std::max(worst, (se.predict(a.matrix, g.features) - gcn.predict(a.matrix, g.features)).cwiseAbs().maxCoeff());
      }
    }
  }
  out.note("max abs diff ").note(worst);
  out.require(worst <= 1e-6, "SE at E=0 differs from plain GCN by " + std::to_string(worst));
}

void topk_properties(Outcome& out) {
  int banks = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed, ++banks) {
    Rng rng(seed);
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(seed % 17);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(seed % 6);
    const Matrix<double> bank = random_matrix(n, d, rng, 2.0);
    const RowVector<double> q = random_matrix(1, d, rng, 2.0);
    const Eigen::VectorXd scores = bank * q.transpose();
    for (Eigen::Index k = 1; k <= n; ++k) {
      const auto sel = topk_attention<double>(q, bank, k);
      Eigen::VectorXd dense = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i < sel.index.size(); ++i) dense(sel.index[i]) += sel.weight[i];
      const auto nonzero = (dense.array() != 0.0).count();
      if (nonzero != k) out.require(false, "bank " + std::to_string(seed) + " K=" + std::to_string(k) + " has " +
                                              std::to_string(nonzero) + " nonzero weights");
      if (std::abs(dense.sum() - 1.0) > 1e-6) out.require(false, "weights do not sum to 1 for bank " + std::to_string(seed));
    }
    Eigen::VectorXd w = (scores.array() - scores.maxCoeff()).exp();
    w /= w.sum();
    const RowVector<double> softmax = w.transpose() * bank;
    if ((virtual_neighborhood(q, bank, n) - softmax).cwiseAbs().maxCoeff() > 1e-10)
      out.require(false, "K=N differs from softmax for bank " + std::to_string(seed));
    Eigen::Index best = 0;
    scores.maxCoeff(&best);
    if ((virtual_neighborhood(q, bank, 1) - bank.row(best)).cwiseAbs().maxCoeff() != 0.0)
      out.require(false, "K=1 is not the argmax row for bank " + std::to_string(seed));
  }
  out.note(banks).note(" random banks, every K");
}

void lp_contraction(Outcome& out) {
  double worst_ratio_excess = -1.0;
  double worst_small = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const GraphBundle g = random_graph(40, 0.12, 4, 2, seed);
    const NodeList train{0, 3, 5, 9, 14, 22, 31};
    for (double alpha : {0.01, 0.1, 0.5, 0.9, 0.99}) {
      std::vector<Matrix<double>> trace;
      label_propagation(g, train, {40, LpMatrix::laplacian, alpha}, &trace);
      for (std::size_t t = 2; t < trace.size(); ++t) {
        const double prev = (trace[t - 1] - trace[t - 2]).norm();
        if (prev < 1e-12) continue;
        worst_ratio_excess = std::max(worst_ratio_excess, (trace[t] - trace[t - 1]).norm() / prev - alpha);
      }
    }
    for (auto kind : {LpMatrix::laplacian, LpMatrix::adjacency}) {
      std::vector<Matrix<double>> trace;
      const Matrix<double> e = label_propagation(g, train, {1, kind, 0.01}, &trace);
      const SparseMatrix<double> m = kind == LpMatrix::laplacian
                                         ? normalized_adjacency<double>(g.adjacency, false).matrix
                                         : mean_adjacency<double>(g.adjacency);
      const double scale = std::max(1.0, Matrix<double>(m * trace.front()).cwiseAbs().maxCoeff());
      worst_small = std::max(worst_small, (e - trace.front()).cwiseAbs().maxCoeff() / scale);
    }
  }
  out.note("max(ratio - alpha) ").note(worst_ratio_excess).note(", max |E-G|/scale at alpha=0.01 ").note(worst_small);
  out.require(worst_ratio_excess <= 1e-6, "contraction ratio exceeds alpha");
  out.require(worst_small <= 0.01 + 1e-12, "alpha=0.01, T=1 output is not within 1% of G");
}

void cora_reproduction(Outcome& out) {
  const auto g = load_cora(out);
  if (!g) return;
  const auto [s, post] = make_degree_splits(*g, 0.1, 0.1, 0.1, 0);
  auto teacher = train_teacher<double>(post, s, TeacherConfig{}, 0);
  const double z_gnn = teacher.report.test_accuracy.at(Split::overall);
  const double z_mlp = train_simple_mlp<double>(post, s, MlpConfig{}, 0).report.test_accuracy.at(Split::overall);
  TeacherConfig plain;
  plain.use_se = false;
  const double gcn_iso = train_teacher<double>(post, s, plain, 0).report.test_accuracy.at(Split::isolation);
  auto bank = export_embedding_bank(teacher.model, post, BankMode::concat);
  const double student_iso =
      train_student<double>(post, s, std::move(bank), StudentConfig{}, 17).report.test_accuracy.at(Split::isolation);
  out.note("teacher ").note(fmt(z_gnn)).note(", MLP ").note(fmt(z_mlp)).note(", isolation student ").note(fmt(student_iso))
      .note(" vs GCN ").note(fmt(gcn_iso));
  out.require(std::abs(z_gnn - 86.96) <= 3.0, "teacher overall outside 86.96 +- 3");
  out.require(std::abs(z_mlp - 69.02) <= 3.0, "MLP overall outside 69.02 +- 3");
  out.require(student_iso - gcn_iso >= 5.0, "student isolation margin below 5 points");
}

void oversmoothing_depth64(Outcome& out) {
  const auto g = load_cora(out);
  if (!g) return;
  const auto [s, post] = make_degree_splits(*g, 0.1, 0.1, 0.1, 0);
  TeacherConfig se;
  se.num_layers = 64;
  TeacherConfig plain = se;
  plain.use_se = false;
  const double z_se = train_teacher<double>(post, s, se, 0).report.test_accuracy.at(Split::overall);
  const double z_plain = train_teacher<double>(post, s, plain, 0).report.test_accuracy.at(Split::overall);
  out.note("64 layers: SE ").note(fmt(z_se)).note(" vs plain ").note(fmt(z_plain));
  out.require(z_se - z_plain >= 20.0, "SE margin below 20 points");
}

void homophily(Outcome& out) {
  const GraphBundle triangle = make_graph(3, {{0, 1}, {1, 2}, {0, 2}}, {1, 1, 1}, 2);
  const GraphBundle star = make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}, {0, 1, 1, 1, 1}, 2);
  const double bt = homophily_beta(triangle);
  const double bs = homophily_beta(star);
  out.note("triangle ").note(bt).note(", star ").note(bs);
  out.require(bt == 100.0, "triangle beta is not exactly 100");
  out.require(bs == 0.0, "star beta is not exactly 0");
  const auto g = load_cora(out);
  if (!g) return;
  const double bc = homophily_beta(*g);
  out.note(", Cora ").note(fmt(bc));
  out.require(std::abs(bc - 83.0) <= 2.0, "Cora beta outside 83 +- 2");
}

void linkpred_ordering(Outcome& out) {
  const auto g = load_cora(out);
  if (!g) return;
  const auto [s, post] = make_degree_splits(*g, 0.1, 0.1, 0.1, 0);
  double student = 0.0;
  double gcn = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    student += train_link_predictor<double>(LinkModel::student, post, s, TeacherConfig{}, StudentConfig{}, LinkConfig{},
                                            seed, 0).mrr / 5.0;
    gcn += train_link_predictor<double>(LinkModel::gcn, post, s, TeacherConfig{}, StudentConfig{}, LinkConfig{}, seed, 0)
               .mrr / 5.0;
  }
  out.note("5-seed MRR: student ").note(fmt(student, 4)).note(" vs GCN ").note(fmt(gcn, 4));
  out.require(student > gcn, "student MRR does not exceed GCN MRR");
}

void split_integrity(Outcome& out) {
  std::vector<GraphBundle> graphs{two_cluster()};
  for (std::uint64_t seed = 0; seed < 5; ++seed) graphs.push_back(synth_power_law(1000, 2.5, 0.2, 5, seed));
  if (fs::exists(cora_dir() / "meta")) graphs.push_back(load_bundle(cora_dir()));
  TempDir dir("acceptance");
  int runs = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    for (std::uint64_t seed = 0; seed < 3; ++seed, ++runs) {
      const GraphBundle& g = graphs[i];
      const auto [s, post] = make_degree_splits(g, 0.1, 0.1, 0.1, seed);
      const std::string tag = std::to_string(i) + "/" + std::to_string(seed);
      for (NodeId v : s.isolation)
        if (post.adjacency.degree(v) != 0) out.require(false, "isolation node with edges in graph " + tag);
      std::vector<int> owner(static_cast<std::size_t>(g.num_nodes()), 0);
      for (const NodeList* group : {&s.head, &s.tail, &s.isolation, &s.middle})
        for (NodeId v : *group) ++owner[static_cast<std::size_t>(v)];
      if (std::any_of(owner.begin(), owner.end(), [](int c) { return c != 1; }))
        out.require(false, "groups are not a partition in graph " + tag);
      for (Split sp : kAllSplits) {
        const Partition p = s.parts(sp);
        std::vector<NodeId> all = p.train;
        all.insert(all.end(), p.val.begin(), p.val.end());
        all.insert(all.end(), p.test.begin(), p.test.end());
        std::sort(all.begin(), all.end());
        if (std::adjacent_find(all.begin(), all.end()) != all.end())
          out.require(false, "train/val/test overlap in graph " + tag);
      }
      const auto again = make_degree_splits(g, 0.1, 0.1, 0.1, seed);
      save_splits(s, dir / ("a" + std::to_string(runs)));
      save_splits(again.splits, dir / ("b" + std::to_string(runs)));
      for (const auto& e : fs::directory_iterator(dir / ("a" + std::to_string(runs)))) {
        const fs::path twin = dir / ("b" + std::to_string(runs)) / e.path().filename();
        if (read_file(e.path()) != read_file(twin))
          out.require(false, "rerun differs in " + e.path().filename().string() + " for graph " + tag);
      }
    }
  }
  out.note(runs).note(" split runs over ").note(graphs.size()).note(" graphs");
}

const std::vector<std::pair<std::string, std::function<void(Outcome&)>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> all{
      {"fcr_exactness", fcr_exactness},       {"gradient_suite", gradient_suite},
      {"se_init_equivalence", se_init_equivalence}, {"topk_properties", topk_properties},
      {"lp_contraction", lp_contraction},     {"cora_reproduction", cora_reproduction},
      {"oversmoothing_depth64", oversmoothing_depth64}, {"homophily", homophily},
      {"linkpred_ordering", linkpred_ordering}, {"split_integrity", split_integrity}};
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.empty())
    for (const auto& [name, fn] : criteria()) wanted.push_back(name);
  int failures = 0;
  for (const auto& name : wanted) {
    const auto it = std::find_if(criteria().begin(), criteria().end(), [&](const auto& c) { return c.first == name; });
    if (it == criteria().end()) {
      std::cout << "FAIL " << name << ": unknown criterion\n";
      ++failures;
      continue;
    }
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      it->second(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string text = out.detail.str();
    for (const auto& f : out.failures) text += (text.empty() ? "" : " | ") + f;
    std::cout << (out.pass ? "PASS " : "FAIL ") << name << ": " << text << " (" << fmt(secs, 1) << " s)\n" << std::flush;
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
