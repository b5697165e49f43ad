#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cvrpdiff/instance.hpp"
#include "cvrpdiff/model.hpp"
#include "cvrpdiff/rng.hpp"
#include "cvrpdiff/nn/params.hpp"

namespace cvrpdiff::testing {

struct FdResult {
  double worst = 0.0;
  std::string where;
  int checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor).
inline double rel_err(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

// Five-point central differences of `loss` w.r.t. trainable entries of
// `params`, compared with `analytic`. Checks at most `per_param` random
// entries of each parameter.
inline FdResult finite_difference(nn::ParamSet& params, const nn::GradBuffer& analytic,
                                  const std::function<double()>& loss, int per_param = 6, double eps = 1e-4,
                                  unsigned seed = 7) {
  FdResult r;
  std::mt19937 rng(seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    const auto size = p.value.size();
    std::vector<Eigen::Index> picks;
    if (size <= per_param) {
      for (Eigen::Index k = 0; k < size; ++k) picks.push_back(k);
    } else {
      std::uniform_int_distribution<Eigen::Index> u(0, size - 1);
      for (int k = 0; k < per_param; ++k) picks.push_back(u(rng));
    }
    for (auto k : picks) {
      double& x = p.value.data()[k];
      const double orig = x;
      auto at = [&](double h) {
        x = orig + h;
        const double v = loss();
        x = orig;
        return v;
      };
      const double num = (8.0 * (at(eps / 2) - at(-eps / 2)) - (at(eps) - at(-eps))) / (6.0 * eps);
      const double e = rel_err(analytic.g[i].data()[k], num);
      ++r.checked;
      if (e > r.worst) {
        r.worst = e;
        r.where = p.name + "[" + std::to_string(k) + "] analytic " + fmt(analytic.g[i].data()[k]) +
                  " numeric " + fmt(num);
      }
    }
  }
  return r;
}

// Instance with explicit data for hand-checked cases.
inline CvrpInstance make_instance(Point depot, std::vector<Point> coords, std::vector<int> demands, int capacity) {
  return {depot, std::move(coords), std::move(demands), capacity};
}

// Tiny architecture for gradient and invariance checks.
inline ModelConfig small_config(int d = 8, int heads = 2, int layers = 2) {
  ModelConfig c;
  c.d = d;
  c.heads = heads;
  c.gat_layers = layers;
  c.denoiser_layers = layers;
  c.encoder_layers = layers;
  return c;
}

// Moves every parameter away from its initial value, including running
// statistics, so that identity-like defaults cannot hide mistakes.
inline void perturb_params(nn::ParamSet& params, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const bool is_var = p.name.size() >= 11 && p.name.compare(p.name.size() - 11, 11, "running_var") == 0;
    for (Eigen::Index k = 0; k < p.value.size(); ++k)
      p.value.data()[k] = is_var ? 0.5 + (u(rng) + 0.5) * 1.5 : p.value.data()[k] + u(rng) * 0.3;
  }
}

// Random customer order cut greedily into capacity-feasible routes.
inline CvrpSolution random_solution(const CvrpInstance& inst, Rng& rng) {
  std::vector<int> order(static_cast<std::size_t>(inst.size()));
  for (int i = 0; i < inst.size(); ++i) order[static_cast<std::size_t>(i)] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  CvrpSolution s;
  int load = inst.capacity;
  for (int c : order) {
    if (load + inst.demand(c) > inst.capacity) {
      s.routes.emplace_back();
      load = 0;
    }
    s.routes.back().push_back(c);
    load += inst.demand(c);
  }
  return s;
}

}  // namespace cvrpdiff::testing
