#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "cvrpdiff/nn/params.hpp"
#include "cvrpdiff/nn/tape.hpp"

namespace cvrpdiff::nn {

class BnRecorder;

// Puts the parameters of one ParamSet on a tape. Each parameter becomes a
// single leaf on first use; its gradient flows into `grads` when given and
// the parameter is trainable.
class Binder {
 public:
  Binder(Tape& tape, const ParamSet& params, GradBuffer* grads = nullptr, bool training = false,
         BnRecorder* recorder = nullptr);

  Var operator()(std::size_t index);
  const Matrix& value(std::size_t index) const { return params_[index].value; }
  Tape& tape() { return tape_; }
  bool training() const { return training_; }
  BnRecorder* recorder() { return recorder_; }

 private:
  Tape& tape_;
  const ParamSet& params_;
  GradBuffer* grads_;
  bool training_;
  BnRecorder* recorder_;
  std::vector<int> ids_;
};

inline constexpr std::size_t kNoParam = std::numeric_limits<std::size_t>::max();

// y = x W (+ b), W stored in x out.
struct Linear {
  std::size_t w = kNoParam;
  std::size_t b = kNoParam;

  static Linear make(ParamSet& params, const std::string& name, int in, int out, bool bias, Rng& rng);
  Var operator()(Binder& bind, Var x) const;
};

// Linear - ReLU - Linear.
struct Mlp2 {
  Linear first, second;

  static Mlp2 make(ParamSet& params, const std::string& name, int in, int hidden, int out, Rng& rng);
  Var operator()(Binder& bind, Var x) const;
};

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

// Batch normalisation over rows with running statistics kept as
// non-trainable parameters.
struct BatchNorm {
  std::size_t gamma = kNoParam, beta = kNoParam, mean = kNoParam, var = kNoParam;

  static BatchNorm make(ParamSet& params, const std::string& name, int width);
  Var operator()(Binder& bind, Var x) const;
};

// Collects batch statistics seen in training-mode forward passes and folds
// their average into the running statistics.
class BnRecorder {
 public:
  void observe(std::size_t mean_index, std::size_t var_index, const Matrix& mean, const Matrix& var);
  void commit(ParamSet& params, double momentum = kBnMomentum);
  bool empty() const { return sums_.empty(); }

 private:
  struct Acc {
    Matrix sum;
    int count = 0;
  };
  std::map<std::size_t, Acc> sums_;
};

}  // namespace cvrpdiff::nn
