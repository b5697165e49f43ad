#include "cvrpdiff/nn/adam.hpp"

#include <cmath>

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff::nn {

Adam::Adam(const ParamSet& params, AdamConfig config) : config_(config) {
  for (const auto& p : params) {
    m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void Adam::step(ParamSet& params, const GradBuffer& grads) {
  if (grads.g.size() != params.size() || m_.size() != params.size())
    throw ModelError("optimizer and parameter set disagree in size");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, t_);
  const double c2 = 1.0 - std::pow(config_.beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    Matrix g = grads.g[i];
    if (config_.weight_decay != 0.0) g += config_.weight_decay * p.value;
    if (!g.allFinite()) throw ModelError("non-finite gradient for " + p.name);
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.value.array() -= config_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.eps);
  }
}

}  // namespace cvrpdiff::nn
