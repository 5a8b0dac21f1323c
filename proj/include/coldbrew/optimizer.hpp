#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "coldbrew/errors.hpp"
#include "coldbrew/tape.hpp"

namespace coldbrew {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 0.005;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

std::string to_string(const OptimizerConfig& cfg);
/// Parses "adam:0.005" / "sgd:0.005" (weight decay is set separately).
OptimizerConfig parse_optimizer(const std::string& text);

/// SGD or bias-corrected Adam over a fixed parameter list. Weight decay is
/// added to the gradient of parameters flagged for decay.
template <typename Scalar>
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, ParameterRefs<Scalar> params) : cfg_(cfg), params_(std::move(params)) {
    if (cfg_.kind == OptimizerKind::adam) {
      for (auto* p : params_) {
        m_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      }
    }
  }

  const OptimizerConfig& config() const { return cfg_; }
  long steps() const { return step_; }
  const ParameterRefs<Scalar>& parameters() const { return params_; }

  void zero_grad() { zero_grads(params_); }

  void step() {
    ++step_;
    const Scalar lr = static_cast<Scalar>(cfg_.learning_rate);
    const Scalar wd = static_cast<Scalar>(cfg_.weight_decay);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Parameter<Scalar>& p = *params_[k];
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols())
        throw InvalidInput("optimizer: gradient shape mismatch for '" + p.name + "'");
      Matrix<Scalar> g = p.grad;
      if (p.decay && wd != Scalar(0)) g += wd * p.value;
      if (cfg_.kind == OptimizerKind::sgd) {
        p.value -= lr * g;
        continue;
      }
      const Scalar b1 = static_cast<Scalar>(cfg_.beta1);
      const Scalar b2 = static_cast<Scalar>(cfg_.beta2);
      m_[k] = b1 * m_[k] + (Scalar(1) - b1) * g;
      v_[k] = b2 * v_[k] + (Scalar(1) - b2) * g.cwiseAbs2();
      const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(cfg_.beta1, static_cast<double>(step_)));
      const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(cfg_.beta2, static_cast<double>(step_)));
      const Scalar eps = static_cast<Scalar>(cfg_.epsilon);
      p.value.array() -= lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps);
    }
  }

 private:
  OptimizerConfig cfg_;
  ParameterRefs<Scalar> params_;
  std::vector<Matrix<Scalar>> m_;
  std::vector<Matrix<Scalar>> v_;
  long step_ = 0;
};

}  // namespace coldbrew
