#pragma once

#include <vector>

#include "cvrpdiff/nn/params.hpp"

namespace cvrpdiff::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

// Adam over the trainable entries of one ParamSet.
class Adam {
 public:
  Adam(const ParamSet& params, AdamConfig config);
  void step(ParamSet& params, const GradBuffer& grads);
  int steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_, v_;
  int t_ = 0;
};

}  // namespace cvrpdiff::nn
