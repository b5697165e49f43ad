#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cvrpdiff/linalg.hpp"

namespace cvrpdiff::nn {

class Tape;

// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Define-by-run reverse-mode differentiation. Values are computed eagerly
// when an op is recorded; backward() propagates from a scalar node and adds
// leaf gradients into their sinks.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad)>;

  Var constant(Matrix value);
  // Leaf whose gradient is added into *sink by backward(). A null sink makes
  // it a constant.
  Var leaf(Matrix value, Matrix* sink);
  Var record(Matrix value, bool needs_grad, Backward backward);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  // Adds `g` into the gradient of node `id` (no-op for constants).
  void accumulate(int id, const Matrix& g);

  void backward(Var scalar);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    Matrix* sink = nullptr;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// --- elementwise and linear algebra ---------------------------------------
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_row(Var a, Var row);  // broadcasts a 1 x d row over every row of a
Var add_const(Var a, const Matrix& c);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var log(Var a);

// --- reductions and reshaping ----------------------------------------------
Var sum(Var a);        // 1 x 1
Var mean(Var a);       // 1 x 1
Var mean_rows(Var a);  // 1 x cols
// Sums consecutive blocks of `group` rows: (rows/group) x cols.
Var sum_row_groups(Var a, int group);
Var gather_rows(Var a, const std::vector<int>& index);
// Multiplies row r by weights[r] (constants).
Var scale_rows(Var a, const std::vector<double>& weights);
Var column(Var a, int c);
Var pick(Var a, int r, int c);  // 1 x 1

// k x 1 column of a(r, c) for every (r, c) in `entries`.
Var pick_many(Var a, const std::vector<std::pair<int, int>>& entries);

// Row-wise log-softmax.
Var log_softmax(Var a);
// Row-wise log-softmax restricted to allowed entries (row-major, 1 = keep).
// Excluded entries get -inf and receive no gradient; every row needs at
// least one allowed entry.
Var masked_log_softmax(Var a, const std::vector<std::uint8_t>& allowed);

// Multi-head scaled dot-product attention. Q is n x d, K is m x d, V is
// m x dv, both d and dv divisible by `heads`. allowed (row-major n x m, 1 =
// attend) may be empty for full attention; rows with nothing allowed give a
// zero output. When `weights` is non-null it receives the n x (heads * m)
// attention weights, head-major within each row.
Var attention(Var q, Var k, Var v, const std::vector<std::uint8_t>& allowed, int heads, Matrix* weights = nullptr);

// Batch normalisation over rows. Training mode normalises with the batch
// statistics and reports them through `observed_mean` / `observed_var`
// (unbiased) when non-null; eval mode uses the given running statistics.
Var batch_norm(Var x, Var gamma, Var beta, bool training, const Matrix& running_mean, const Matrix& running_var,
               double eps, Matrix* observed_mean, Matrix* observed_var);

}  // namespace cvrpdiff::nn
