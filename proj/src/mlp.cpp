#include "coldbrew/mlp.hpp"

namespace coldbrew {

void MlpConfig::validate() const {
  if (hidden_layers < 0) throw InvalidInput("mlp: hidden_layers must be >= 0");
  if (hidden_layers > 0 && hidden_dim < 1) throw InvalidInput("mlp: hidden_dim must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw InvalidInput("mlp: dropout must be in [0, 1)");
  if (max_epochs < 1 || patience < 1) throw InvalidInput("mlp: max_epochs and patience must be positive");
}

KeyValues MlpConfig::describe() const {
  return {{"hidden_layers", std::to_string(hidden_layers)},
          {"hidden_dim", std::to_string(hidden_dim)},
          {"optimizer", to_string(optimizer)},
          {"weight_decay", format_number(optimizer.weight_decay)},
          {"dropout", format_number(dropout)},
          {"max_epochs", std::to_string(max_epochs)},
          {"patience", std::to_string(patience)}};
}

}  // namespace coldbrew
