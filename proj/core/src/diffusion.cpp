#include "cvrpdiff/diffusion.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <string>

#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/rng.hpp"

namespace cvrpdiff {

namespace {

constexpr double kClamp = 1e-12;

Mat2 flip_kernel(double b) { return {{{1.0 - b, b}, {b, 1.0 - b}}}; }

void check_step(int t, const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.T)
    throw InputError("timestep " + std::to_string(t) + " outside 1.." + std::to_string(schedule.T));
}

}  // namespace

Mat2 mat2_identity() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }

Mat2 mat2_mul(const Mat2& a, const Mat2& b) {
  Mat2 c{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
  return c;
}

Mat2 NoiseSchedule::step(int t) const {
  check_step(t, *this);
  return flip_kernel(betas[static_cast<std::size_t>(t - 1)]);
}

Mat2 NoiseSchedule::between(int s, int t) const {
  if (s < 0 || s >= t || t > T) throw InputError("invalid kernel range " + std::to_string(s) + ".." + std::to_string(t));
  return flip_kernel(0.5 * (1.0 - retention[static_cast<std::size_t>(t)] / retention[static_cast<std::size_t>(s)]));
}

NoiseSchedule make_schedule(int T, double beta1, double betaT) {
  if (T < 1) throw InputError("schedule needs T >= 1");
  if (!(beta1 >= 0.0 && beta1 <= betaT && betaT < 0.5))
    throw InputError("schedule needs 0 <= beta1 <= betaT < 0.5");
  NoiseSchedule s;
  s.T = T;
  s.betas.resize(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t)
    s.betas[t - 1] = T == 1 ? beta1 : beta1 + (t - 1) * (betaT - beta1) / (T - 1);
  s.betas.back() = T == 1 ? beta1 : betaT;
  s.qbar.resize(static_cast<std::size_t>(T) + 1);
  s.retention.resize(static_cast<std::size_t>(T) + 1);
  s.qbar[0] = mat2_identity();
  s.retention[0] = 1.0;
  for (int t = 1; t <= T; ++t) {
    s.qbar[t] = mat2_mul(s.qbar[t - 1], flip_kernel(s.betas[t - 1]));
    s.retention[t] = s.retention[t - 1] * (1.0 - 2.0 * s.betas[t - 1]);
  }
  return s;
}

Matrix EdgeState::one_hot() const {
  const int n = bits.size();
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n) * n, 2);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r * n + c, bits(r, c) ? 1 : 0) = 1.0;
  return m;
}

EdgeState sample_xt(const ConstraintMatrix& x0, int t, const NoiseSchedule& schedule, std::uint64_t seed,
                    bool symmetric) {
  check_step(t, schedule);
  const double flip = schedule.cumulative(t)[0][1];
  Rng rng(seed);
  std::bernoulli_distribution coin(flip);
  const int n = x0.size();
  EdgeState out{ConstraintMatrix(n), t};
  for (int r = 0; r < n; ++r)
    for (int c = symmetric ? r + 1 : 0; c < n; ++c) {
      if (r == c) continue;
      const bool v = x0(r, c) != coin(rng);
      out.bits.set(r, c, v);
      if (symmetric) out.bits.set(c, r, v);
    }
  return out;
}

Prob2 posterior(int xt, int x0, int t, const NoiseSchedule& schedule) {
  check_step(t, schedule);
  const Mat2 q = schedule.step(t);
  const Mat2& qbar_prev = schedule.cumulative(t - 1);
  const double denom = schedule.cumulative(t)[x0][xt];
  assert(denom > 0.0);
  return {q[0][xt] * qbar_prev[x0][0] / denom, q[1][xt] * qbar_prev[x0][1] / denom};
}

Prob2 skip_posterior(int xt, int x0, int t, int s, const NoiseSchedule& schedule) {
  check_step(t, schedule);
  if (s < 0 || s >= t) throw InputError("skip_posterior needs 0 <= s < t");
  const Mat2 k = schedule.between(s, t);
  const Mat2& qbar_s = schedule.cumulative(s);
  const double a = k[0][xt] * qbar_s[x0][0];
  const double b = k[1][xt] * qbar_s[x0][1];
  const double z = a + b;
  assert(z > 0.0);
  return {a / z, b / z};
}

double reverse_probability(int xt, double p_one, int t, int s, const NoiseSchedule& schedule) {
  const double from_zero = skip_posterior(xt, 0, t, s, schedule)[1];
  const double from_one = skip_posterior(xt, 1, t, s, schedule)[1];
  return (1.0 - p_one) * from_zero + p_one * from_one;
}

EdgeState reverse_step(const EdgeState& xt, const EdgeProbabilities& x0_probs, int t, int t_prev,
                       const NoiseSchedule& schedule, std::uint64_t seed, bool symmetric) {
  if (t > schedule.T || t < 1) throw InputError("reverse_step: timestep outside the schedule");
  if (t_prev < 0 || t_prev >= t) throw InputError("reverse_step needs t > t_prev >= 0");
  const int n = xt.bits.size();
  if (x0_probs.rows() != n || x0_probs.cols() != n) throw InputError("reverse_step: dimension mismatch");
  if (t_prev == 0) return {threshold_probabilities(x0_probs, 0.5), 0};

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EdgeState out{ConstraintMatrix(n), t_prev};
  for (int r = 0; r < n; ++r)
    for (int c = symmetric ? r + 1 : 0; c < n; ++c) {
      if (r == c) continue;
      const double p_one = symmetric ? 0.5 * (x0_probs(r, c) + x0_probs(c, r)) : x0_probs(r, c);
      const double p = reverse_probability(xt.bits(r, c) ? 1 : 0, std::clamp(p_one, 0.0, 1.0), t, t_prev, schedule);
      const bool v = unit(rng) < p;
      out.bits.set(r, c, v);
      if (symmetric) out.bits.set(c, r, v);
    }
  return out;
}

namespace {

void check_pred(const EdgeProbabilities& pred, const ConstraintMatrix& truth) {
  const int n = truth.size();
  if (pred.rows() != n || pred.cols() != n) throw InputError("x0_loss: dimension mismatch");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!(pred(i, j) >= 0.0 && pred(i, j) <= 1.0))
        throw InputError("x0_loss: prediction outside [0,1] at (" + std::to_string(i) + "," + std::to_string(j) + ")");
}

}  // namespace

double x0_loss(const EdgeProbabilities& pred, const ConstraintMatrix& truth) {
  check_pred(pred, truth);
  const int n = truth.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double p = std::clamp(pred(i, j), kClamp, 1.0 - kClamp);
      sum -= truth(i, j) ? std::log(p) : std::log1p(-p);
    }
  return sum / (0.5 * n * (n - 1));
}

Matrix x0_loss_grad(const EdgeProbabilities& pred, const ConstraintMatrix& truth) {
  check_pred(pred, truth);
  const int n = truth.size();
  Matrix g = Matrix::Zero(n, n);
  if (n < 2) return g;
  const double scale = 1.0 / (0.5 * n * (n - 1));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double raw = pred(i, j);
      if (raw < kClamp || raw > 1.0 - kClamp) continue;  // clamped: flat
      g(i, j) = truth(i, j) ? -scale / raw : scale / (1.0 - raw);
    }
  return g;
}

double vlb_term(const EdgeState& xt, const ConstraintMatrix& x0, const EdgeProbabilities& x0_probs,
                const NoiseSchedule& schedule) {
  const int n = x0.size();
  const int t = xt.t;
  check_step(t, schedule);
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int bit = xt.bits(i, j) ? 1 : 0;
      const double p_one = std::clamp(0.5 * (x0_probs(i, j) + x0_probs(j, i)), kClamp, 1.0 - kClamp);
      if (t == 1) {
        sum -= x0(i, j) ? std::log(p_one) : std::log1p(-p_one);
        continue;
      }
      const Prob2 q = posterior(bit, x0(i, j) ? 1 : 0, t, schedule);
      const double p1 = std::clamp(reverse_probability(bit, p_one, t, t - 1, schedule), kClamp, 1.0 - kClamp);
      const Prob2 p{1.0 - p1, p1};
      for (int k = 0; k < 2; ++k)
        if (q[k] > 0.0) sum += q[k] * std::log(q[k] / p[k]);
    }
  return sum / (0.5 * n * (n - 1));
}

InferenceSchedule make_inference_schedule(int T, int inference_steps) {
  if (T < 1 || inference_steps < 1 || inference_steps > T)
    throw InputError("inference schedule needs 1 <= T' <= T");
  std::vector<int> ts;
  ts.reserve(static_cast<std::size_t>(inference_steps) + 1);
  for (int k = 0; k < inference_steps; ++k)
    ts.push_back(T - static_cast<int>((static_cast<long long>(k) * T) / inference_steps));
  ts.push_back(0);
  InferenceSchedule s;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) s.steps.emplace_back(ts[k], ts[k + 1]);
  return s;
}

}  // namespace cvrpdiff
