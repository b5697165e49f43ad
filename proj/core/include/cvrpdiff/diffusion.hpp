#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "cvrpdiff/constraint_matrix.hpp"
#include "cvrpdiff/linalg.hpp"

namespace cvrpdiff {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Prob2 = std::array<double, 2>;

Mat2 mat2_identity();
Mat2 mat2_mul(const Mat2& a, const Mat2& b);

// Bernoulli flip kernel Q_t = [[1-b, b], [b, 1-b]] with a linear beta
// schedule. Timesteps are 1-based; index 0 of the cumulative tables is the
// identity.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> betas;  // betas[t - 1] = beta_t
  std::vector<Mat2> qbar;     // qbar[t] = Q_1 ... Q_t, sequential products
  // retention[t] = prod_{k<=t} (1 - 2 beta_k): the second eigenvalue of
  // qbar[t]. Ratios of it give multi-step kernels without cancellation.
  std::vector<double> retention;

  Mat2 step(int t) const;
  const Mat2& cumulative(int t) const { return qbar.at(static_cast<std::size_t>(t)); }
  // Kernel from step s to step t (s < t): Q_{s+1} ... Q_t.
  Mat2 between(int s, int t) const;
};

// beta_t = beta1 + (t-1)(betaT-beta1)/(T-1); requires T >= 1 and
// 0 <= beta1 <= betaT < 0.5.
NoiseSchedule make_schedule(int T, double beta1, double betaT);

struct EdgeState {
  ConstraintMatrix bits;
  int t = 0;
  // (N*N) x 2 one-hot lift, row r*N + c.
  Matrix one_hot() const;
};

// Flips each off-diagonal entry with probability qbar_t[0][1]. With
// `symmetric`, the upper triangle is sampled and mirrored.
EdgeState sample_xt(const ConstraintMatrix& x0, int t, const NoiseSchedule& schedule, std::uint64_t seed,
                    bool symmetric = true);

// q(x_{t-1} | x_t, x_0) for a single entry.
Prob2 posterior(int xt, int x0, int t, const NoiseSchedule& schedule);

// q(x_s | x_t, x_0) for s < t; s = t - 1 reduces to `posterior`.
Prob2 skip_posterior(int xt, int x0, int t, int s, const NoiseSchedule& schedule);

// p(x_s = 1 | x_t) = sum over x0 of q(x_s = 1 | x_t, x0) p(x0 | x_t), where
// `p_one` is the predicted probability that x0 = 1.
double reverse_probability(int xt, double p_one, int t, int s, const NoiseSchedule& schedule);

// One reverse transition from t to t_prev. For t_prev == 0 the result is the
// symmetrized x0 prediction thresholded at 0.5 (no sampling).
EdgeState reverse_step(const EdgeState& xt, const EdgeProbabilities& x0_probs, int t, int t_prev,
                       const NoiseSchedule& schedule, std::uint64_t seed, bool symmetric = true);

// Mean binary cross-entropy over strictly upper-triangular entries, with
// predictions clamped to [1e-12, 1 - 1e-12].
double x0_loss(const EdgeProbabilities& pred, const ConstraintMatrix& truth);
// Gradient of x0_loss w.r.t. every entry of `pred` (zero off the upper triangle).
Matrix x0_loss_grad(const EdgeProbabilities& pred, const ConstraintMatrix& truth);

// Mean per-entry KL[q(x_{t-1}|x_t,x_0) || p(x_{t-1}|x_t)] over the upper
// triangle; for t == 1 it is the reconstruction term -log p(x_0|x_1).
double vlb_term(const EdgeState& xt, const ConstraintMatrix& x0, const EdgeProbabilities& x0_probs,
                const NoiseSchedule& schedule);

struct InferenceSchedule {
  // (t, t_prev) pairs, strictly decreasing, first t == T, last t_prev == 0.
  std::vector<std::pair<int, int>> steps;
};

// T' timesteps t_k = T - floor(k T / T') for k = 0..T'-1, paired
// consecutively and closed by the terminal step 0.
InferenceSchedule make_inference_schedule(int T, int inference_steps);

}  // namespace cvrpdiff
