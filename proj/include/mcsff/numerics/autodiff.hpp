#pragma once

// Tape-based reverse-mode differentiation over dense matrices.
//
// Nodes are appended in evaluation order, so the tape is acyclic by
// construction and reverse index order is a valid reverse topological order.

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcsff/numerics/matrix.hpp"
#include "mcsff/numerics/ops.hpp"

namespace mcsff::ad {

using num::Activation;
using num::Matrix;
using num::SegmentIndex;

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Propagates the node's upstream gradient (tape.grad(self)) into its parents.
  using Backward = std::function<void(Tape& tape, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  // Appends an op node. The value is checked for finiteness.
  Var record(std::string_view op, Matrix value, std::vector<std::size_t> parents, Backward backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::string_view op(std::size_t id) const { return nodes_[id].op; }
  const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_[id].parents; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Mutable gradient slot; only meaningful during backward() for nodes that
  // require gradients.
  Matrix& grad_slot(std::size_t id) { return nodes_[id].grad; }

  // loss must be 1x1. Every node that requires a gradient gets a slot of its
  // value's shape; unreachable parameters keep a zero gradient.
  void backward(Var loss);

 private:
  struct Node {
    std::string op;
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    Backward backward;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  bool has_gradients_ = false;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scalar_mul(double c, Var a);
Var transpose(Var a);
// x (n x d) plus the row vector b (1 x d) on every row.
Var add_row(Var x, Var b);

Var map_sigma(Var a, Activation kind);
Var map_tanh(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope = num::kDefaultLeakySlope);

Var sum(Var a);
Var mean(Var a);

Var gather_rows(Var x, std::vector<std::size_t> rows);
// Sums the item rows of each segment: (items x d) -> (segments x d).
Var segment_sum(Var x, const SegmentIndex& segments);
// Row r of x scaled by w(r, 0).
Var scale_rows(Var x, Var w);
// Row-wise inner products: (m x d), (m x d) -> (m x 1).
Var row_dot(Var a, Var b);
Var segment_softmax(Var scores, const SegmentIndex& segments);
Var l2_normalize_rows(Var x, double eps = 1e-12);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);

}  // namespace mcsff::ad
