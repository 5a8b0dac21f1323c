#include "coldbrew/teacher.hpp"

#include <fstream>

namespace coldbrew {

std::string to_string(Residual r) {
  switch (r) {
    case Residual::none: return "none";
    case Residual::last: return "last";
    case Residual::initial: return "initial";
    case Residual::dense: return "dense";
    case Residual::jumping: return "jumping";
  }
  return "?";
}

Residual parse_residual(const std::string& text) {
  for (Residual r : {Residual::none, Residual::last, Residual::initial, Residual::dense, Residual::jumping})
    if (to_string(r) == text) return r;
  throw InvalidInput("unknown residual kind '" + text + "'");
}

std::string to_string(BankMode m) { return m == BankMode::final ? "final" : "concat"; }

BankMode parse_bank_mode(const std::string& text) {
  if (text == "final") return BankMode::final;
  if (text == "concat") return BankMode::concat;
  throw InvalidInput("unknown bank mode '" + text + "'");
}

void TeacherConfig::validate() const {
  if (num_layers < 2) throw InvalidInput("teacher: num_layers must be >= 2");
  if (hidden_dim < 1) throw InvalidInput("teacher: hidden_dim must be positive");
  if (eta < 0.0) throw InvalidInput("teacher: eta must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0) throw InvalidInput("teacher: dropout must be in [0, 1)");
  if (drop_edge < 0.0 || drop_edge >= 1.0) throw InvalidInput("teacher: drop_edge must be in [0, 1)");
  if (max_epochs < 1 || patience < 1) throw InvalidInput("teacher: max_epochs and patience must be positive");
  if (shared_bias && !use_se) throw InvalidInput("teacher: shared_bias requires use_se");
}

KeyValues TeacherConfig::describe() const {
  return {{"num_layers", std::to_string(num_layers)},
          {"hidden_dim", std::to_string(hidden_dim)},
          {"use_se", use_se ? "true" : "false"},
          {"shared_bias", shared_bias ? "true" : "false"},
          {"residual", to_string(residual)},
          {"norm", to_string(norm)},
          {"dropout", format_number(dropout)},
          {"drop_edge", format_number(drop_edge)},
          {"eta", format_number(eta)},
          {"self_loops", self_loops ? "true" : "false"},
          {"optimizer", to_string(optimizer)},
          {"weight_decay", format_number(optimizer.weight_decay)},
          {"max_epochs", std::to_string(max_epochs)},
          {"patience", std::to_string(patience)},
          {"activation", "relu"},
          {"layer_order", "norm,residual,activation"}};
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidInput("bad boolean for " + key + ": '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidInput("bad number for " + key + ": '" + v + "'");
}

}  // namespace

void TeacherConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "num_layers") num_layers = static_cast<int>(parse_real(k, v));
    else if (k == "hidden_dim") hidden_dim = static_cast<Eigen::Index>(parse_real(k, v));
    else if (k == "use_se") use_se = parse_bool(k, v);
    else if (k == "shared_bias") shared_bias = parse_bool(k, v);
    else if (k == "residual") residual = parse_residual(v);
    else if (k == "norm") norm = parse_norm_kind(v);
    else if (k == "dropout") dropout = parse_real(k, v);
    else if (k == "drop_edge") drop_edge = parse_real(k, v);
    else if (k == "eta") eta = parse_real(k, v);
    else if (k == "self_loops") self_loops = parse_bool(k, v);
    else if (k == "optimizer") {
      const double wd = optimizer.weight_decay;
      optimizer = parse_optimizer(v);
      optimizer.weight_decay = wd;
    } else if (k == "weight_decay") optimizer.weight_decay = parse_real(k, v);
    else if (k == "max_epochs") max_epochs = static_cast<int>(parse_real(k, v));
    else if (k == "patience") patience = static_cast<int>(parse_real(k, v));
    else if (k == "activation" || k == "layer_order") continue;
    else throw InvalidInput("unknown teacher setting '" + k + "'");
  }
}

void write_report(const TrainReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  KeyValues kv{{"model", r.model}, {"seed", std::to_string(r.seed)}};
  for (const auto& [k, v] : r.config) kv.emplace_back("config." + k, v);
  kv.emplace_back("epochs_run", std::to_string(r.fit.epochs_run));
  kv.emplace_back("best_epoch", std::to_string(r.fit.best_epoch));
  kv.emplace_back("val_accuracy", format_number(r.val_accuracy));
  for (const auto& [s, acc] : r.test_accuracy) kv.emplace_back("test_accuracy." + to_string(s), format_number(acc));
  write_key_values(dir / "report.txt", kv);
  std::ofstream out(dir / "loss_curve.csv", std::ios::binary);
  out << "epoch,loss,val\n";
  for (std::size_t i = 0; i < r.fit.loss_curve.size(); ++i)
    out << i << ',' << format_number(r.fit.loss_curve[i]) << ',' << format_number(r.fit.val_curve[i]) << '\n';
}

}  // namespace coldbrew
