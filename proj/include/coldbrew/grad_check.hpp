#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "coldbrew/errors.hpp"
#include "coldbrew/tape.hpp"

namespace coldbrew {

struct GradCheckOptions {
  double eps = 1e-5;
  /// Coordinates checked per parameter; larger parameters get a seeded sample.
  std::size_t max_coords_per_param = 64;
  /// Gradients below this magnitude are compared on an absolute scale.
  double abs_floor = 1e-5;
  std::uint64_t seed = 0;
};

/// Builds a scalar loss on the given tape, registering the checked parameters
/// through Tape::leaf(). Must be deterministic across calls.
using LossClosure = std::function<Var(Tape<double>&)>;

/// Max relative error between tape gradients and central finite differences.
inline double grad_check(const LossClosure& closure, const ParameterRefs<double>& params,
                         const GradCheckOptions& opts = {}) {
  auto evaluate = [&closure]() {
    Tape<double> tape(false);
    const double v = tape.scalar(closure(tape));
    if (!std::isfinite(v)) throw InvalidInput("grad_check: non-finite loss");
    return v;
  };

  zero_grads(params);
  {
    Tape<double> tape(true);
    Var loss = closure(tape);
    if (!std::isfinite(tape.scalar(loss))) throw InvalidInput("grad_check: non-finite loss");
    tape.backward(loss);
  }

  Rng rng(opts.seed);
  double worst = 0.0;
  for (auto* p : params) {
    const Eigen::Index size = p->value.size();
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(size));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (coords.size() > opts.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opts.max_coords_per_param);
    }
    for (Eigen::Index c : coords) {
      double& x = p->value.data()[c];
      const double saved = x;
      x = saved + opts.eps;
      const double up = evaluate();
      x = saved - opts.eps;
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * opts.eps);
      const double analytic = p->grad.data()[c];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), opts.abs_floor});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  return worst;
}

}  // namespace coldbrew
