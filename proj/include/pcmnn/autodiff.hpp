#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace pcmnn::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;
};

/// Reverse-mode tape over small dense matrices.
///
/// Nodes are appended in evaluation order, so every node's parents precede
/// it and a single reverse sweep yields exact chain-rule gradients for all
/// leaves that require them.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int)>;

  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value) { return leaf(std::move(value), false); }
  Var constant(double value);

  /// Seeds d(output)/d(output) = 1 and sweeps. `output` must be 1x1.
  void backward(Var output);
  bool has_backward() const { return backward_done_; }

  const Matrix& value(int id) const { return nodes_[id].value; }
  /// Gradient of the last backward output; zero for nodes it does not reach.
  /// Throws std::logic_error if backward has not run.
  const Matrix& grad(int id) const;
  std::size_t size() const { return nodes_.size(); }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  // Building blocks for the op library.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward);
  /// Adds `delta` into the adjoint of `id`, allocating it on first touch.
  void accumulate(int id, const Matrix& delta);
  const Matrix& adjoint(int id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Elementwise and linear algebra ops. Shapes must agree exactly except where
// noted; mismatches throw std::invalid_argument.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // elementwise (Hadamard)
Var operator*(double c, Var a);
Var operator+(Var a, double c);
Var operator-(Var a);

/// (n x k) * (k x m).
Var matmul(Var a, Var b);
/// Adds a 1 x m row to every row of an n x m matrix.
Var add_row(Var a, Var row);
Var tanh(Var a);
Var sigmoid(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
/// Column j as an n x 1 node.
Var column(Var a, Eigen::Index j);

}  // namespace pcmnn::ad
