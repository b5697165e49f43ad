#include "cvrpdiff/nn/layers.hpp"

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff::nn {

Binder::Binder(Tape& tape, const ParamSet& params, GradBuffer* grads, bool training, BnRecorder* recorder)
    : tape_(tape), params_(params), grads_(grads), training_(training), recorder_(recorder), ids_(params.size(), -1) {
  if (grads_ && grads_->g.size() != params.size()) throw ModelError("gradient buffer does not match parameters");
}

Var Binder::operator()(std::size_t index) {
  if (index >= ids_.size()) throw ModelError("parameter index out of range");
  if (ids_[index] < 0) {
    const auto& p = params_[index];
    Matrix* sink = grads_ && p.trainable ? &grads_->g[index] : nullptr;
    ids_[index] = tape_.leaf(p.value, sink).id();
  }
  return {&tape_, ids_[index]};
}

Linear Linear::make(ParamSet& params, const std::string& name, int in, int out, bool bias, Rng& rng) {
  Linear l;
  l.w = params.add(name + ".w", init_uniform(in, out, in, rng));
  if (bias) l.b = params.add(name + ".b", init_uniform(1, out, in, rng));
  return l;
}

Var Linear::operator()(Binder& bind, Var x) const {
  Var y = matmul(x, bind(w));
  return b == kNoParam ? y : add_row(y, bind(b));
}

Mlp2 Mlp2::make(ParamSet& params, const std::string& name, int in, int hidden, int out, Rng& rng) {
  return {Linear::make(params, name + ".0", in, hidden, true, rng), Linear::make(params, name + ".1", hidden, out, true, rng)};
}

Var Mlp2::operator()(Binder& bind, Var x) const { return second(bind, relu(first(bind, x))); }

BatchNorm BatchNorm::make(ParamSet& params, const std::string& name, int width) {
  BatchNorm bn;
  bn.gamma = params.add(name + ".gamma", Matrix::Ones(1, width));
  bn.beta = params.add(name + ".beta", Matrix::Zero(1, width));
  bn.mean = params.add(name + ".running_mean", Matrix::Zero(1, width), false);
  bn.var = params.add(name + ".running_var", Matrix::Ones(1, width), false);
  return bn;
}

Var BatchNorm::operator()(Binder& bind, Var x) const {
  if (!bind.training())
    return batch_norm(x, bind(gamma), bind(beta), false, bind.value(mean), bind.value(var), kBnEps, nullptr, nullptr);
  Matrix m, v;
  Var y = batch_norm(x, bind(gamma), bind(beta), true, bind.value(mean), bind.value(var), kBnEps, &m, &v);
  if (auto* rec = bind.recorder()) rec->observe(mean, var, m, v);
  return y;
}

void BnRecorder::observe(std::size_t mean_index, std::size_t var_index, const Matrix& mean, const Matrix& var) {
  for (auto [idx, val] : {std::pair{mean_index, &mean}, std::pair{var_index, &var}}) {
    auto& acc = sums_[idx];
    if (acc.count == 0)
      acc.sum = *val;
    else
      acc.sum += *val;
    ++acc.count;
  }
}

void BnRecorder::commit(ParamSet& params, double momentum) {
  for (auto& [idx, acc] : sums_) {
    auto& running = params[idx].value;
    running = (1.0 - momentum) * running + momentum * (acc.sum / acc.count);
  }
  sums_.clear();
}

}  // namespace cvrpdiff::nn
