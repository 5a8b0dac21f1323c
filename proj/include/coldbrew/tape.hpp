#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "coldbrew/errors.hpp"
#include "coldbrew/matrix.hpp"

namespace coldbrew {

/// A trainable tensor with its gradient buffer.
template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  /// Whether optimizer weight decay applies.
  bool decay = true;

  Parameter() = default;
  Parameter(std::string n, Matrix<Scalar> v, bool with_decay = true)
      : name(std::move(n)), value(std::move(v)), decay(with_decay) {
    zero_grad();
  }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename Scalar>
using ParameterRefs = std::vector<Parameter<Scalar>*>;

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

/// Records primitive operations in order and replays their backward rules in
/// exact reverse order. Values are owned by the tape; parameters registered
/// with leaf() receive their gradients when backward() finishes.
///
/// A tape built with grad_enabled=false records values only, which is what
/// inference paths use.
template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using Backward = std::function<void(Tape&, const Mat&)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Mat value) { return push(std::move(value), false, nullptr); }

  Var leaf(Parameter<Scalar>& p) {
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
    return push(p.value, grad_enabled_, grad_enabled_ ? &p : nullptr);
  }

  /// Record the result of a primitive. The backward rule runs only when the
  /// output received a gradient, and only if some input requires one.
  Var record(Mat value, std::initializer_list<Var> inputs, Backward backward) {
    return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
  }

  Var record(Mat value, std::vector<Var> inputs, Backward backward) {
    bool needs = false;
    for (Var v : inputs) needs = needs || requires_grad(v);
    if (!needs) return push(std::move(value), false, nullptr);
    Var out = push(std::move(value), true, nullptr);
    ops_.push_back(Op{std::move(inputs), out, std::move(backward)});
    return out;
  }

  const Mat& value(Var v) const { return nodes_.at(v.id).value; }

  Scalar scalar(Var v) const {
    const Mat& m = value(v);
    if (m.size() != 1) throw InvalidInput("tape value is not a scalar");
    return m(0, 0);
  }

  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Add `g` into the gradient of `v`. No-op for constants.
  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_.at(v.id);
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

  /// Gradient of a recorded value after backward(); zeros if none reached it.
  Mat grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.has_grad) return n.grad;
    return Mat::Zero(n.value.rows(), n.value.cols());
  }

  void backward(Var loss) {
    if (!grad_enabled_) throw InvalidInput("backward() on a tape without gradients");
    Node& root = nodes_.at(loss.id);
    if (root.value.size() != 1) throw InvalidInput("backward() requires a scalar loss");
    if (!root.requires_grad) return;
    root.grad = Mat::Ones(1, 1);
    root.has_grad = true;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
      const Node& out = nodes_[it->output.id];
      if (!out.has_grad) continue;
      it->backward(*this, out.grad);
    }
    for (Node& n : nodes_) {
      if (n.param == nullptr) continue;
      if (n.has_grad) n.param->grad += n.grad;
    }
  }

  std::size_t num_values() const { return nodes_.size(); }
  std::size_t num_ops() const { return ops_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool has_grad = false;
    Parameter<Scalar>* param = nullptr;
  };
  struct Op {
    std::vector<Var> inputs;
    Var output;
    Backward backward;
  };

  Var push(Mat value, bool needs_grad, Parameter<Scalar>* param) {
    nodes_.push_back(Node{std::move(value), Mat(), needs_grad, false, param});
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<Op> ops_;
  bool grad_enabled_;
};

template <typename Scalar>
void zero_grads(const ParameterRefs<Scalar>& params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace coldbrew
