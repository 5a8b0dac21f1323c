#include <sstream>

#include "coldbrew/io.hpp"
#include "coldbrew/ops.hpp"
#include "coldbrew/optimizer.hpp"

namespace coldbrew {

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::none: return "none";
    case NormKind::batch: return "batch";
    case NormKind::pair: return "pair";
    case NormKind::node: return "node";
    case NormKind::mean: return "mean";
  }
  return "?";
}

NormKind parse_norm_kind(const std::string& text) {
  for (NormKind k : {NormKind::none, NormKind::batch, NormKind::pair, NormKind::node, NormKind::mean})
    if (to_string(k) == text) return k;
  throw InvalidInput("unknown norm kind '" + text + "'");
}

std::string to_string(const OptimizerConfig& cfg) {
  return std::string(cfg.kind == OptimizerKind::adam ? "adam" : "sgd") + ":" + format_number(cfg.learning_rate);
}

OptimizerConfig parse_optimizer(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidInput("optimizer must look like adam:0.005, got '" + text + "'");
  OptimizerConfig cfg;
  const std::string kind = text.substr(0, colon);
  if (kind == "adam") {
    cfg.kind = OptimizerKind::adam;
  } else if (kind == "sgd") {
    cfg.kind = OptimizerKind::sgd;
  } else {
    throw InvalidInput("unknown optimizer '" + kind + "'");
  }
  try {
    std::size_t pos = 0;
    cfg.learning_rate = std::stod(text.substr(colon + 1), &pos);
    if (pos != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidInput("bad learning rate in '" + text + "'");
  }
  if (!(cfg.learning_rate > 0.0)) throw InvalidInput("learning rate must be positive");
  return cfg;
}

}  // namespace coldbrew
