#include "pcmnn/autodiff.hpp"

#include <stdexcept>
#include <string>

namespace pcmnn::ad {

namespace {

void require_same_shape(Var a, Var b, const char* op) {
  if (a.tape != b.tape) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }
const Matrix& Var::grad() const { return tape->grad(id); }

double Var::scalar() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("scalar(): node is not 1x1");
  return v(0, 0);
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& p : parents) {
    if (p.tape != this) throw std::invalid_argument("record: parent belongs to another tape");
    node.needs_grad = node.needs_grad || nodes_[p.id].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Matrix& delta) {
  Node& node = nodes_[id];
  if (!node.needs_grad) return;
  if (node.grad.size() == 0) {
    node.grad = delta;
  } else {
    node.grad += delta;
  }
}

void Tape::backward(Var output) {
  if (output.tape != this) throw std::invalid_argument("backward: output belongs to another tape");
  const auto& out = nodes_[output.id].value;
  if (out.rows() != 1 || out.cols() != 1) throw std::invalid_argument("backward: output must be 1x1");
  for (auto& node : nodes_) node.grad.resize(0, 0);
  nodes_[output.id].grad = Matrix::Ones(1, 1);
  for (int id = output.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.grad.size() == 0 || !node.backward) continue;
    node.backward(*this, id);
  }
  for (auto& node : nodes_) {
    if (node.grad.size() == 0) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  }
  backward_done_ = true;
}

const Matrix& Tape::grad(int id) const {
  if (!backward_done_) throw std::logic_error("gradient requested before backward pass");
  return nodes_[id].grad;
}

Var operator+(Var a, Var b) {
  require_same_shape(a, b, "add");
  return a.tape->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.adjoint(self));
    t.accumulate(b.id, t.adjoint(self));
  });
}

Var operator-(Var a, Var b) {
  require_same_shape(a, b, "sub");
  return a.tape->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.adjoint(self));
    t.accumulate(b.id, -t.adjoint(self));
  });
}

Var operator*(Var a, Var b) {
  require_same_shape(a, b, "mul");
  return a.tape->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(a.id)) t.accumulate(a.id, g.cwiseProduct(t.value(b.id)));
    if (t.needs_grad(b.id)) t.accumulate(b.id, g.cwiseProduct(t.value(a.id)));
  });
}

Var operator*(double c, Var a) {
  return a.tape->record(c * a.value(), {a}, [a, c](Tape& t, int self) { t.accumulate(a.id, c * t.adjoint(self)); });
}

Var operator+(Var a, double c) {
  Matrix v = a.value().array() + c;
  return a.tape->record(std::move(v), {a}, [a](Tape& t, int self) { t.accumulate(a.id, t.adjoint(self)); });
}

Var operator-(Var a) { return -1.0 * a; }

Var matmul(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("matmul: operands on different tapes");
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                                std::to_string(b.rows()) + " disagree");
  }
  Matrix v = a.value() * b.value();
  return a.tape->record(std::move(v), {a, b}, [a, b](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    if (t.needs_grad(a.id)) t.accumulate(a.id, g * t.value(b.id).transpose());
    if (t.needs_grad(b.id)) t.accumulate(b.id, t.value(a.id).transpose() * g);
  });
}

Var add_row(Var a, Var row) {
  if (a.tape != row.tape) throw std::invalid_argument("add_row: operands on different tapes");
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: row shape mismatch");
  Matrix v = a.value().rowwise() + row.value().row(0);
  return a.tape->record(std::move(v), {a, row}, [a, row](Tape& t, int self) {
    const Matrix& g = t.adjoint(self);
    t.accumulate(a.id, g);
    if (t.needs_grad(row.id)) t.accumulate(row.id, g.colwise().sum());
  });
}

Var tanh(Var a) {
  Matrix v = a.value().array().tanh();
  return a.tape->record(std::move(v), {a}, [a](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.accumulate(a.id, t.adjoint(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var sigmoid(Var a) {
  Matrix v = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape->record(std::move(v), {a}, [a](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.accumulate(a.id, (t.adjoint(self).array() * y * (1.0 - y)).matrix());
  });
}

Var square(Var a) {
  Matrix v = a.value().array().square();
  return a.tape->record(std::move(v), {a}, [a](Tape& t, int self) {
    t.accumulate(a.id, 2.0 * t.adjoint(self).cwiseProduct(t.value(a.id)));
  });
}

Var sum(Var a) {
  const auto rows = a.rows();
  const auto cols = a.cols();
  return a.tape->record(Matrix::Constant(1, 1, a.value().sum()), {a}, [a, rows, cols](Tape& t, int self) {
    t.accumulate(a.id, Matrix::Constant(rows, cols, t.adjoint(self)(0, 0)));
  });
}

Var mean(Var a) {
  const auto n = a.value().size();
  if (n == 0) throw std::invalid_argument("mean: empty node");
  return (1.0 / static_cast<double>(n)) * sum(a);
}

Var column(Var a, Eigen::Index j) {
  if (j < 0 || j >= a.cols()) throw std::invalid_argument("column: index out of range");
  const auto rows = a.rows();
  const auto cols = a.cols();
  return a.tape->record(a.value().col(j), {a}, [a, j, rows, cols](Tape& t, int self) {
    Matrix g = Matrix::Zero(rows, cols);
    g.col(j) = t.adjoint(self);
    t.accumulate(a.id, g);
  });
}

}  // namespace pcmnn::ad
