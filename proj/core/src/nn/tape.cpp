#include "cvrpdiff/nn/tape.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff::nn {

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, nullptr, {}});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Matrix value, Matrix* sink) {
  nodes_.push_back(Node{std::move(value), {}, sink != nullptr, false, sink, {}});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Matrix value, bool needs_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), {}, needs_grad, false, nullptr, needs_grad ? std::move(backward) : Backward{}});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Matrix& g) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var scalar) {
  if (scalar.tape() != this || scalar.rows() != 1 || scalar.cols() != 1)
    throw ModelError("backward() needs a 1x1 node of this tape");
  accumulate(scalar.id(), Matrix::Constant(1, 1, 1.0));
  for (int id = scalar.id(); id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad) continue;
    if (n.backward) {
      // Copy out: the callback may grow other nodes' gradients but never this one.
      const Matrix g = std::move(n.grad);
      n.has_grad = false;
      n.backward(*this, g);
    } else if (n.sink) {
      *n.sink += n.grad;
      n.has_grad = false;
    }
  }
}

namespace {

bool any_grad(std::initializer_list<Var> vs) {
  for (const auto& v : vs)
    if (v.tape()->needs_grad(v.id())) return true;
  return false;
}

void same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw ModelError("operands live on different tapes");
}

void same_shape(Var a, Var b, const char* op) {
  same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ModelError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() + b.value(), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value() - b.value(), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  same_shape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.value().cwiseProduct(b.value()), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  return a.tape()->record(a.value() * s, any_grad({a}), [ia, s](Tape& t, const Matrix& g) { t.accumulate(ia, g * s); });
}

Var add_row(Var a, Var row) {
  same_tape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw ModelError("add_row: row must be 1 x cols");
  const int ia = a.id(), ir = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape()->record(std::move(out), any_grad({a, row}), [ia, ir](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    if (t.needs_grad(ir)) t.accumulate(ir, g.colwise().sum());
  });
}

Var add_const(Var a, const Matrix& c) {
  if (c.rows() != a.rows() || c.cols() != a.cols()) throw ModelError("add_const: shape mismatch");
  const int ia = a.id();
  return a.tape()->record(a.value() + c, any_grad({a}), [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Var matmul(Var a, Var b) {
  same_tape(a, b);
  if (a.cols() != b.rows())
    throw ModelError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()));
  const int ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value();
  return a.tape()->record(std::move(out), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var transpose(Var a) {
  const int ia = a.id();
  return a.tape()->record(a.value().transpose(), any_grad({a}),
                          [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g.transpose()); });
}

Var relu(Var a) {
  const int ia = a.id();
  return a.tape()->record(a.value().cwiseMax(0.0), any_grad({a}), [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, (t.value(ia).array() > 0.0).select(g, 0.0));
  });
}

Var sigmoid(Var a) {
  Matrix y = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  Matrix saved = y;
  const int ia = a.id();
  return a.tape()->record(std::move(y), any_grad({a}), [ia, saved = std::move(saved)](Tape& t, const Matrix& g) {
    t.accumulate(ia, (g.array() * saved.array() * (1.0 - saved.array())).matrix());
  });
}

Var tanh(Var a) {
  Matrix y = a.value().array().tanh().matrix();
  const int ia = a.id();
  Matrix saved = y;
  return a.tape()->record(std::move(y), any_grad({a}), [ia, saved = std::move(saved)](Tape& t, const Matrix& g) {
    t.accumulate(ia, (g.array() * (1.0 - saved.array().square())).matrix());
  });
}

Var log(Var a) {
  const int ia = a.id();
  return a.tape()->record(a.value().array().log().matrix(), any_grad({a}), [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, (g.array() / t.value(ia).array()).matrix());
  });
}

Var sum(Var a) {
  const int ia = a.id();
  const auto r = a.rows(), c = a.cols();
  return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), any_grad({a}),
                          [ia, r, c](Tape& t, const Matrix& g) { t.accumulate(ia, Matrix::Constant(r, c, g(0, 0))); });
}

Var mean(Var a) {
  const auto count = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / count);
}

Var mean_rows(Var a) {
  const int ia = a.id();
  const auto r = a.rows();
  Matrix out = a.value().colwise().mean();
  return a.tape()->record(std::move(out), any_grad({a}), [ia, r](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.replicate(r, 1) / static_cast<double>(r));
  });
}

Var sum_row_groups(Var a, int group) {
  if (group <= 0 || a.rows() % group != 0) throw ModelError("sum_row_groups: rows not divisible by group");
  const auto groups = a.rows() / group;
  const auto c = a.cols();
  Matrix out = Matrix::Zero(groups, c);
  const auto& v = a.value();
  for (Eigen::Index gi = 0; gi < groups; ++gi) out.row(gi) = v.middleRows(gi * group, group).colwise().sum();
  const int ia = a.id();
  return a.tape()->record(std::move(out), any_grad({a}), [ia, group, groups, c](Tape& t, const Matrix& g) {
    Matrix da(groups * group, c);
    for (Eigen::Index gi = 0; gi < groups; ++gi) da.middleRows(gi * group, group) = g.row(gi).replicate(group, 1);
    t.accumulate(ia, da);
  });
}

Var gather_rows(Var a, const std::vector<int>& index) {
  const auto& v = a.value();
  Matrix out(static_cast<Eigen::Index>(index.size()), v.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= v.rows()) throw ModelError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = v.row(index[r]);
  }
  const int ia = a.id();
  const auto rows = v.rows(), cols = v.cols();
  return a.tape()->record(std::move(out), any_grad({a}), [ia, index, rows, cols](Tape& t, const Matrix& g) {
    Matrix da = Matrix::Zero(rows, cols);
    for (std::size_t r = 0; r < index.size(); ++r) da.row(index[r]) += g.row(static_cast<Eigen::Index>(r));
    t.accumulate(ia, da);
  });
}

Var scale_rows(Var a, const std::vector<double>& weights) {
  if (static_cast<Eigen::Index>(weights.size()) != a.rows()) throw ModelError("scale_rows: weight count mismatch");
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  Matrix out = w.asDiagonal() * a.value();
  const int ia = a.id();
  return a.tape()->record(std::move(out), any_grad({a}), [ia, weights](Tape& t, const Matrix& g) {
    const Eigen::Map<const Eigen::VectorXd> wv(weights.data(), static_cast<Eigen::Index>(weights.size()));
    t.accumulate(ia, wv.asDiagonal() * g);
  });
}

Var column(Var a, int c) {
  if (c < 0 || c >= a.cols()) throw ModelError("column: index out of range");
  const int ia = a.id();
  const auto rows = a.rows(), cols = a.cols();
  return a.tape()->record(a.value().col(c), any_grad({a}), [ia, c, rows, cols](Tape& t, const Matrix& g) {
    Matrix da = Matrix::Zero(rows, cols);
    da.col(c) = g.col(0);
    t.accumulate(ia, da);
  });
}

Var pick(Var a, int r, int c) {
  if (r < 0 || r >= a.rows() || c < 0 || c >= a.cols()) throw ModelError("pick: index out of range");
  const int ia = a.id();
  const auto rows = a.rows(), cols = a.cols();
  return a.tape()->record(Matrix::Constant(1, 1, a.value()(r, c)), any_grad({a}),
                          [ia, r, c, rows, cols](Tape& t, const Matrix& g) {
                            Matrix da = Matrix::Zero(rows, cols);
                            da(r, c) = g(0, 0);
                            t.accumulate(ia, da);
                          });
}

Var log_softmax(Var a) {
  const auto& v = a.value();
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const double mx = v.row(r).maxCoeff();
    const double lse = mx + std::log((v.row(r).array() - mx).exp().sum());
    out.row(r) = v.row(r).array() - lse;
  }
  Matrix saved = out;
  const int ia = a.id();
  return a.tape()->record(std::move(out), any_grad({a}), [ia, saved = std::move(saved)](Tape& t, const Matrix& g) {
    // d/dx = g - softmax * rowsum(g)
    Matrix da = g;
    for (Eigen::Index r = 0; r < g.rows(); ++r) da.row(r) -= saved.row(r).array().exp().matrix() * g.row(r).sum();
    t.accumulate(ia, da);
  });
}

Var pick_many(Var a, const std::vector<std::pair<int, int>>& entries) {
  const auto& v = a.value();
  Matrix out(static_cast<Eigen::Index>(entries.size()), 1);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto [r, c] = entries[k];
    if (r < 0 || r >= v.rows() || c < 0 || c >= v.cols()) throw ModelError("pick_many: index out of range");
    out(static_cast<Eigen::Index>(k), 0) = v(r, c);
  }
  const int ia = a.id();
  const auto rows = v.rows(), cols = v.cols();
  return a.tape()->record(std::move(out), any_grad({a}), [ia, entries, rows, cols](Tape& t, const Matrix& g) {
    Matrix da = Matrix::Zero(rows, cols);
    for (std::size_t k = 0; k < entries.size(); ++k)
      da(entries[k].first, entries[k].second) += g(static_cast<Eigen::Index>(k), 0);
    t.accumulate(ia, da);
  });
}

Var masked_log_softmax(Var a, const std::vector<std::uint8_t>& allowed) {
  const auto& v = a.value();
  if (static_cast<Eigen::Index>(allowed.size()) != v.size()) throw ModelError("masked_log_softmax: mask size mismatch");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Matrix out = Matrix::Constant(v.rows(), v.cols(), neg_inf);
  Matrix prob = Matrix::Zero(v.rows(), v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const auto* keep = &allowed[static_cast<std::size_t>(r * v.cols())];
    double mx = neg_inf;
    for (Eigen::Index c = 0; c < v.cols(); ++c)
      if (keep[c]) mx = std::max(mx, v(r, c));
    if (!std::isfinite(mx)) throw ModelError("masked_log_softmax: row with no allowed entry");
    double z = 0.0;
    for (Eigen::Index c = 0; c < v.cols(); ++c)
      if (keep[c]) z += std::exp(v(r, c) - mx);
    const double lse = mx + std::log(z);
    for (Eigen::Index c = 0; c < v.cols(); ++c)
      if (keep[c]) {
        out(r, c) = v(r, c) - lse;
        prob(r, c) = std::exp(out(r, c));
      }
  }
  const int ia = a.id();
  return a.tape()->record(std::move(out), any_grad({a}), [ia, prob = std::move(prob), allowed](Tape& t, const Matrix& g) {
    Matrix da = Matrix::Zero(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      double total = 0.0;
      for (Eigen::Index c = 0; c < g.cols(); ++c)
        if (allowed[static_cast<std::size_t>(r * g.cols() + c)]) total += g(r, c);
      for (Eigen::Index c = 0; c < g.cols(); ++c)
        if (allowed[static_cast<std::size_t>(r * g.cols() + c)]) da(r, c) = g(r, c) - prob(r, c) * total;
    }
    t.accumulate(ia, da);
  });
}

Var attention(Var q, Var k, Var v, const std::vector<std::uint8_t>& allowed, int heads, Matrix* weights) {
  same_tape(q, k);
  same_tape(q, v);
  const auto n = q.rows(), m = k.rows(), d = q.cols(), dv = v.cols();
  if (k.cols() != d || v.rows() != m) throw ModelError("attention: shape mismatch");
  if (heads <= 0 || d % heads != 0 || dv % heads != 0) throw ModelError("attention: head count must divide widths");
  if (!allowed.empty() && static_cast<Eigen::Index>(allowed.size()) != n * m)
    throw ModelError("attention: mask size mismatch");
  const auto dk = d / heads, dvh = dv / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dk));
  const auto& Q = q.value();
  const auto& K = k.value();
  const auto& V = v.value();

  std::vector<Matrix> probs(static_cast<std::size_t>(heads));
  Matrix out = Matrix::Zero(n, dv);
  if (weights) *weights = Matrix::Zero(n, heads * m);
  for (int h = 0; h < heads; ++h) {
    Matrix s = Q.middleCols(h * dk, dk) * K.middleCols(h * dk, dk).transpose() * inv;
    Matrix& a = probs[static_cast<std::size_t>(h)];
    a = Matrix::Zero(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < m; ++j)
        if (allowed.empty() || allowed[static_cast<std::size_t>(i * m + j)]) mx = std::max(mx, s(i, j));
      if (!std::isfinite(mx)) continue;
      double z = 0.0;
      for (Eigen::Index j = 0; j < m; ++j)
        if (allowed.empty() || allowed[static_cast<std::size_t>(i * m + j)]) z += (a(i, j) = std::exp(s(i, j) - mx));
      a.row(i) /= z;
    }
    out.middleCols(h * dvh, dvh) = a * V.middleCols(h * dvh, dvh);
    if (weights) weights->middleCols(h * m, m) = a;
  }
  const int iq = q.id(), ik = k.id(), iv = v.id();
  return q.tape()->record(std::move(out), any_grad({q, k, v}),
                          [iq, ik, iv, heads, dk, dvh, inv, probs = std::move(probs)](Tape& t, const Matrix& g) {
                            const auto& Q = t.value(iq);
                            const auto& K = t.value(ik);
                            const auto& V = t.value(iv);
                            Matrix dQ = Matrix::Zero(Q.rows(), Q.cols());
                            Matrix dK = Matrix::Zero(K.rows(), K.cols());
                            Matrix dV = Matrix::Zero(V.rows(), V.cols());
                            for (int h = 0; h < heads; ++h) {
                              const Matrix& a = probs[static_cast<std::size_t>(h)];
                              const Matrix go = g.middleCols(h * dvh, dvh);
                              dV.middleCols(h * dvh, dvh) += a.transpose() * go;
                              const Matrix da = go * V.middleCols(h * dvh, dvh).transpose();
                              Matrix ds = a.cwiseProduct(da);
                              const Eigen::VectorXd row_dot = ds.rowwise().sum();
                              ds -= (a.array().colwise() * row_dot.array()).matrix();
                              ds *= inv;
                              dQ.middleCols(h * dk, dk) += ds * K.middleCols(h * dk, dk);
                              dK.middleCols(h * dk, dk) += ds.transpose() * Q.middleCols(h * dk, dk);
                            }
                            t.accumulate(iq, dQ);
                            t.accumulate(ik, dK);
                            t.accumulate(iv, dV);
                          });
}

Var batch_norm(Var x, Var gamma, Var beta, bool training, const Matrix& running_mean, const Matrix& running_var,
               double eps, Matrix* observed_mean, Matrix* observed_var) {
  same_tape(x, gamma);
  same_tape(x, beta);
  const auto n = x.rows(), c = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1 || beta.cols() != c)
    throw ModelError("batch_norm: affine parameters must be 1 x cols");
  const auto& X = x.value();
  Matrix mu, var;
  if (training) {
    if (n < 2) throw ModelError("batch_norm: training mode needs at least two rows");
    mu = X.colwise().mean();
    var = (X.rowwise() - mu.row(0)).array().square().colwise().mean().matrix();
    if (observed_mean) *observed_mean = mu;
    if (observed_var) *observed_var = var * (static_cast<double>(n) / static_cast<double>(n - 1));
  } else {
    mu = running_mean;
    var = running_var;
  }
  const Matrix inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix xhat = (X.rowwise() - mu.row(0)).array().rowwise() * inv_std.row(0).array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape()->record(std::move(out), any_grad({x, gamma, beta}),
                          [ix, ig, ib, training, n, xhat = std::move(xhat), inv_std](Tape& t, const Matrix& g) {
                            if (t.needs_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                            if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
                            if (!t.needs_grad(ix)) return;
                            const auto& gam = t.value(ig);
                            Matrix gx = g.array().rowwise() * gam.row(0).array();  // dL/dxhat
                            if (training) {
                              const Matrix m1 = gx.colwise().mean();
                              const Matrix m2 = gx.cwiseProduct(xhat).colwise().mean();
                              gx = (gx.rowwise() - m1.row(0)) - (xhat.array().rowwise() * m2.row(0).array()).matrix();
                            }
                            (void)n;
                            t.accumulate(ix, (gx.array().rowwise() * inv_std.row(0).array()).matrix());
                          });
}

}  // namespace cvrpdiff::nn
