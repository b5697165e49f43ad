// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: cvrpdiff_acceptance [--only 1,4,9]

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/support.hpp"
#include "cvrpdiff/augmentation.hpp"
#include "cvrpdiff/cvrplib.hpp"
#include "cvrpdiff/io.hpp"
#include "cvrpdiff/oracles.hpp"
#include "cvrpdiff/training.hpp"

namespace {

using namespace cvrpdiff;
using testing::finite_difference;
using testing::perturb_params;
using testing::small_config;
using nn::Var;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// ---------------------------------------------------------------------------
// 1. Exact diffusion analytics

// q(x_k = b | x_0 = a) by propagating a two-state distribution step by step.
long double marginal(int a, int b, int k, const NoiseSchedule& s) {
  long double p[2] = {a == 0 ? 1.0L : 0.0L, a == 1 ? 1.0L : 0.0L};
  for (int j = 1; j <= k; ++j) {
    const long double beta = s.betas[static_cast<std::size_t>(j - 1)];
    const long double q0 = p[0] * (1 - beta) + p[1] * beta;
    const long double q1 = p[1] * (1 - beta) + p[0] * beta;
    p[0] = q0;
    p[1] = q1;
  }
  return p[b];
}

Verdict diffusion_analytics() {
  const auto t0 = Clock::now();
  const auto s = make_schedule(1000, 1e-4, 2e-2);
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick(2, 1000);
  std::vector<int> ts{1};
  while (ts.size() < 20) ts.push_back(pick(rng));
  double bayes = 0.0, chain = 0.0, skip = 0.0;
  for (int t : ts) {
    const long double beta = s.betas[static_cast<std::size_t>(t - 1)];
    for (int xt = 0; xt < 2; ++xt)
      for (int x0 = 0; x0 < 2; ++x0) {
        const auto p = posterior(xt, x0, t, s);
        long double w[2];
        for (int prev = 0; prev < 2; ++prev)
          w[prev] = (prev == xt ? 1 - beta : beta) * marginal(x0, prev, t - 1, s);
        for (int prev = 0; prev < 2; ++prev)
          bayes = std::max(bayes, static_cast<double>(std::fabs(p[static_cast<std::size_t>(prev)] - w[prev] / (w[0] + w[1]))));
      }
    for (int x0 = 0; x0 < 2; ++x0)
      for (int prev = 0; prev < 2; ++prev) {
        long double sum = 0.0L;
        for (int xt = 0; xt < 2; ++xt) sum += posterior(xt, x0, t, s)[static_cast<std::size_t>(prev)] * marginal(x0, xt, t, s);
        chain = std::max(chain, static_cast<double>(std::fabs(sum - marginal(x0, prev, t - 1, s))));
      }
  }
  // Skip kernels against single steps composed one at a time, then mixed
  // over a predicted x0 distribution.
  const auto plan = make_inference_schedule(1000, 50);
  for (auto [t, src] : plan.steps) {
    if (src == 0) continue;
    for (int xt = 0; xt < 2; ++xt) {
      Prob2 composed[2];
      for (int x0 = 0; x0 < 2; ++x0) {
        Prob2 dist = xt == 0 ? Prob2{1.0, 0.0} : Prob2{0.0, 1.0};
        for (int k = t; k > src; --k) {
          const auto a = posterior(0, x0, k, s), b = posterior(1, x0, k, s);
          dist = {dist[0] * a[0] + dist[1] * b[0], dist[0] * a[1] + dist[1] * b[1]};
        }
        composed[x0] = dist;
        skip = std::max(skip, std::abs(skip_posterior(xt, x0, t, src, s)[1] - dist[1]));
      }
      for (double p : {0.0, 0.2, 0.5, 0.9, 1.0})
        skip = std::max(skip, std::abs(reverse_probability(xt, p, t, src, s) - ((1 - p) * composed[0][1] + p * composed[1][1])));
    }
  }
  const double secs = seconds_since(t0);
  return {bayes <= 1e-14 && chain <= 1e-14 && skip <= 1e-12 && secs < 1.0,
          fmt("bayes %.2e, chain %.2e, skip %.2e, %.3f s", bayes, chain, skip, secs)};
}

// ---------------------------------------------------------------------------
// 2. Terminal schedule state

Verdict schedule_endpoint() {
  const auto t0 = Clock::now();
  const auto s = make_schedule(1000, 1e-4, 2e-2);
  double worst = 0.0;
  for (const auto& row : s.cumulative(1000))
    for (double v : row) worst = std::max(worst, std::abs(v - 0.5));
  const double secs = seconds_since(t0);
  return {worst <= 1e-3 && secs < 1.0, fmt("max |Qbar_T - 0.5| = %.3e, %.3f s", worst, secs)};
}

// ---------------------------------------------------------------------------
// 3. Constraint matrix worked example

Verdict constraint_example() {
  const auto t0 = Clock::now();
  CvrpInstance inst{{0.5, 0.5}, {}, std::vector<int>(9, 1), 3};
  for (int i = 0; i < 9; ++i) inst.coords.push_back({0.1 * (i + 1), 0.05 * (9 - i)});
  // Depot visits split 0-4-1-3-0-2-9-8-0-5-6-7 into routes.
  const std::vector<int> sequence{0, 4, 1, 3, 0, 2, 9, 8, 0, 5, 6, 7};
  CvrpSolution sol;
  for (int v : sequence) {
    if (v == 0)
      sol.routes.emplace_back();
    else
      sol.routes.back().push_back(v);
  }
  const auto m = from_solution(inst, sol);
  const std::vector<std::set<int>> blocks{{1, 3, 4}, {2, 8, 9}, {5, 6, 7}};
  auto block_of = [&](int c) {
    for (std::size_t b = 0; b < blocks.size(); ++b)
      if (blocks[b].count(c)) return static_cast<int>(b);
    return -1;
  };
  int mismatches = 0;
  for (int i = 1; i <= 9; ++i)
    for (int j = 1; j <= 9; ++j) {
      const bool expect = i != j && block_of(i) == block_of(j);
      if (m(i - 1, j - 1) != expect) ++mismatches;
    }
  bool symmetric = true, zero_diag = true, transitive = true, capacity = true;
  for (int i = 0; i < 9; ++i) {
    zero_diag = zero_diag && !m(i, i);
    int load = inst.demand(i + 1);
    for (int j = 0; j < 9; ++j) {
      symmetric = symmetric && m(i, j) == m(j, i);
      if (m(i, j)) load += inst.demand(j + 1);
      for (int k = 0; k < 9; ++k)
        if (i != k && m(i, j) && m(j, k)) transitive = transitive && m(i, k);
    }
    capacity = capacity && load <= inst.capacity;
  }
  const auto report = validate(m, inst, true);
  const bool ok = mismatches == 0 && symmetric && zero_diag && transitive && capacity && report.violations.empty() &&
                  m.count_ones() == 18;
  const double secs = seconds_since(t0);
  return {ok && secs < 1.0, fmt("%.0f mismatched entries, %.0f validator findings, %.3f s", mismatches,
                                static_cast<double>(report.violations.size()), secs)};
}

// ---------------------------------------------------------------------------
// 4. Gradient checks at d = 8

Matrix gaussian(int r, int c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
  return m;
}

Verdict gradient_checks() {
  const auto t0 = Clock::now();
  const auto config = small_config(8, 2, 2);
  std::vector<std::pair<std::string, testing::FdResult>> results;

  {
    DenoiserParams params(config, 7);
    perturb_params(params.params, 8);
    const int n = 5;
    const EdgeLayout layout(2, n);
    const Matrix h = gaussian(2 * n, 8, 1), e = gaussian(layout.edges(), 8, 2);
    Matrix times(2, 8);
    times << timestep_embedding(3, 8), timestep_embedding(90, 8);
    const Matrix wh = gaussian(2 * n, 8, 3), we = gaussian(layout.edges(), 8, 4);
    auto loss = [&](nn::GradBuffer* grads) {
      nn::Tape tape;
      nn::Binder bind(tape, params.params, grads, true);
      auto [h1, e1] = denoiser_layer(bind, tape.constant(h), tape.constant(e), tape.constant(times), layout, params, 0);
      Var l = nn::add(nn::sum(nn::mul(h1, tape.constant(wh))), nn::sum(nn::mul(e1, tape.constant(we))));
      if (grads) tape.backward(l);
      return l.scalar();
    };
    nn::GradBuffer grads(params.params);
    loss(&grads);
    results.emplace_back("denoiser layer", finite_difference(params.params, grads, [&] { return loss(nullptr); }, 12));
  }
  {
    MaskedEncoderParams enc(config, 5);
    perturb_params(enc.params, 6);
    const auto inst = generate_instance(7, 2);
    Rng rng(1);
    const auto mask = from_solution(inst, testing::random_solution(inst, rng));
    const Matrix h = gaussian(8, 8, 5), w = gaussian(8, 8, 6);
    auto loss = [&](nn::GradBuffer* grads) {
      nn::Tape tape;
      nn::Binder bind(tape, enc.params, grads, true);
      Var out = masked_attention_layer(bind, tape.constant(h), masked_allowed(mask), enc, 1);
      Var l = nn::sum(nn::mul(out, tape.constant(w)));
      if (grads) tape.backward(l);
      return l.scalar();
    };
    nn::GradBuffer grads(enc.params);
    loss(&grads);
    results.emplace_back("masked attention", finite_difference(enc.params, grads, [&] { return loss(nullptr); }, 20));
  }
  {
    GatParams gat(config, 70);
    MaskedEncoderParams enc(config, 71);
    DecoderParams dec(config, 72);
    perturb_params(gat.params, 73);
    perturb_params(enc.params, 74);
    perturb_params(dec.params, 75);
    const auto inst = generate_instance(7, 70);
    Rng rng(70);
    const auto mask = from_solution(inst, testing::random_solution(inst, rng));
    const auto out = encode(inst, mask, gat, enc);
    const std::vector<int> starts{1, 4, 6};
    std::vector<std::vector<int>> forced;
    std::vector<RolloutJob> jobs;
    for (int s : starts) forced.push_back(rollout(inst, out, mask, dec, s, DecodeMode::sample, 3).actions);
    for (std::size_t k = 0; k < starts.size(); ++k) jobs.push_back({0, starts[k], 0, &forced[k]});
    const Matrix w = (Matrix(3, 1) << 0.7, -1.3, 0.4).finished();
    auto loss = [&](nn::GradBuffer* grads) {
      nn::Tape tape;
      nn::Binder bind(tape, dec.params, grads);
      auto res = rollout_batch(bind, {&inst}, {mask}, constant_encoding(tape, out), jobs, DecodeMode::greedy, dec);
      Var l = nn::sum(nn::mul(res.log_prob, tape.constant(w)));
      if (grads) tape.backward(l);
      return l.scalar();
    };
    nn::GradBuffer grads(dec.params);
    loss(&grads);
    results.emplace_back("decoder logits", finite_difference(dec.params, grads, [&] { return loss(nullptr); }, 15));
  }
  {
    PolicyModels policy(config, 6);
    GatParams gat(config, 7);
    perturb_params(policy.encoder.params, 8);
    perturb_params(policy.decoder.params, 9);
    perturb_params(gat.params, 10);
    const auto data = build_labeled_dataset(2, 6, 11, LabelSolver::brute_force);
    std::vector<const CvrpInstance*> insts;
    std::vector<ConstraintMatrix> masks;
    for (const auto& r : data) {
      insts.push_back(&r.instance);
      masks.push_back(from_solution(r.instance, *r.routes));
    }
    const auto first = reinforce_surrogate(insts, masks, gat, policy, 4, 100, nullptr, nullptr, true);
    std::vector<std::vector<int>> forced;
    for (const auto& r : first.rollouts) forced.push_back(r.actions);
    nn::GradBuffer ge(policy.encoder.params), gd(policy.decoder.params);
    reinforce_surrogate(insts, masks, gat, policy, 4, 100, &ge, &gd, true, nullptr, &forced);
    auto loss = [&] {
      return reinforce_surrogate(insts, masks, gat, policy, 4, 100, nullptr, nullptr, true, nullptr, &forced).loss;
    };
    auto fd = finite_difference(policy.decoder.params, gd, loss, 8);
    const auto fe = finite_difference(policy.encoder.params, ge, loss, 8);
    if (fe.worst > fd.worst) fd.where = fe.where;
    fd.worst = std::max(fd.worst, fe.worst);
    fd.checked += fe.checked;
    results.emplace_back("reinforce surrogate", fd);
  }

  bool ok = true;
  std::string detail;
  for (const auto& [name, r] : results) {
    ok = ok && r.worst <= 1e-4 && r.checked > 0;
    detail += name + " " + testing::fmt(r.worst) + "; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 120.0;
  return {ok, detail + fmt("%.2f s", secs)};
}

// ---------------------------------------------------------------------------
// 5-6. Desk-scale training

TrainConfig desk_config() {
  TrainConfig c;
  c.model.d = 32;
  c.model.heads = 4;
  c.model.gat_layers = 3;
  c.model.denoiser_layers = 3;
  c.model.encoder_layers = 3;
  c.diffusion.T = 200;
  c.diffusion.inference_steps = 25;
  c.diffusion.batch = 16;
  c.diffusion.epochs = 300;
  c.diffusion.lr = 1e-3;
  c.diffusion.weight_decay = 0.0;
  c.policy.lr = 1e-3;
  c.policy.batch = 16;
  c.policy.epochs = 100;
  c.policy.patience = 100;
  c.policy.mask_steps = 25;
  c.policy.max_steps = 2000;
  return c;
}

double mean_auc(const std::vector<Record>& data, const DiffusionModels& m, int steps, std::uint64_t seed) {
  std::vector<const CvrpInstance*> insts;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < data.size(); ++i) {
    insts.push_back(&data[i].instance);
    seeds.push_back(substream_seed(seed, "auc/" + std::to_string(i)));
  }
  const auto preds = predict_masks(insts, m, steps, seeds);
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (auto a = auc_score(preds[i].probabilities, from_solution(data[i].instance, *data[i].routes))) {
      sum += *a;
      ++count;
    }
  return count ? sum / count : 0.0;
}

struct Shared {
  std::optional<DiffusionModels> diffusion;
  std::optional<Models> models;
};

Verdict diffusion_training(Shared& shared) {
  const auto t0 = Clock::now();
  const auto config = desk_config();
  const auto train = build_labeled_dataset(200, 12, 1, LabelSolver::brute_force);
  const auto held = build_labeled_dataset(50, 12, 2, LabelSolver::brute_force);
  shared.diffusion = train_diffusion(train, config, 7);
  const double train_auc = mean_auc(train, *shared.diffusion, config.diffusion.inference_steps, 3);
  const double held_auc = mean_auc(held, *shared.diffusion, config.diffusion.inference_steps, 4);
  const double secs = seconds_since(t0);
  return {train_auc >= 0.95 && held_auc >= 0.80 && secs <= 1800.0,
          fmt("train AUC %.4f, held-out AUC %.4f, %.0f s", train_auc, held_auc, secs)};
}

Verdict policy_training(Shared& shared) {
  const auto t0 = Clock::now();
  const auto config = desk_config();
  if (!shared.diffusion) {
    const auto train = build_labeled_dataset(200, 12, 1, LabelSolver::brute_force);
    shared.diffusion = train_diffusion(train, config, 7);
  }
  const auto data = build_dataset(500, 10, 11);
  const auto val = build_labeled_dataset(50, 10, 12, LabelSolver::brute_force);
  TrainReport report;
  auto policy = train_policy(data, *shared.diffusion, config, 5, &report, &val);
  shared.models = Models{config, *shared.diffusion, std::move(policy)};
  double gap = 0.0, obj = 0.0, nn_obj = 0.0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    SolveOptions o;
    o.augmentations = 8;
    o.inference_steps = config.diffusion.inference_steps;
    o.seed = substream_seed(13, "instance/" + std::to_string(i));
    const auto r = solve(val[i].instance, *shared.models, o);
    const double best = tour_length(val[i].instance, *val[i].routes);
    gap += 100.0 * (r.objective - best) / best;
    obj += r.objective;
    nn_obj += tour_length(val[i].instance, nearest_neighbor_solve(val[i].instance));
  }
  const double n = static_cast<double>(val.size());
  gap /= n;
  obj /= n;
  nn_obj /= n;
  const double secs = seconds_since(t0);
  return {report.steps <= 2000 && gap <= 8.0 && obj < nn_obj && secs <= 3600.0,
          fmt("mean gap %.3f%%, objective %.4f vs nearest neighbour %.4f, %.0f s", gap, obj, nn_obj, secs) +
              ", " + std::to_string(report.steps) + " steps"};
}

Models random_models(std::uint64_t seed) {
  Models m;
  m.config = desk_config();
  m.diffusion = DiffusionModels(m.config, seed);
  m.policy = PolicyModels(m.config.model, seed + 1);
  perturb_params(m.diffusion.denoiser.params, static_cast<unsigned>(seed) + 2);
  perturb_params(m.policy.decoder.params, static_cast<unsigned>(seed) + 3);
  return m;
}

// ---------------------------------------------------------------------------
// 7. Feasibility fuzzing

Verdict feasibility_fuzz(const Shared& shared) {
  const auto t0 = Clock::now();
  long steps = 0;
  int violations = 0, solutions = 0;
  std::mt19937_64 rng(77);
  for (int round = 0; steps < 100000; ++round) {
    const auto models = random_models(100 + static_cast<std::uint64_t>(round % 5));
    const int n = 5 + static_cast<int>(rng() % 40);
    auto inst = generate_instance(n, rng());
    if (round % 3 == 0) inst.capacity = *std::max_element(inst.demands.begin(), inst.demands.end());
    Rng mrng(rng());
    const auto mask = round % 2 ? from_solution(inst, testing::random_solution(inst, mrng))
                                : predict_mask(inst, models.diffusion, 5, rng()).mask;
    const auto enc = encode(inst, mask, models.diffusion.gat, models.policy.encoder);
    for (int start = 1; start <= n; start += 3) {
      const auto mode = start % 2 ? DecodeMode::sample : DecodeMode::greedy;
      const auto r = rollout(inst, enc, mask, models.policy.decoder, start, mode, rng());
      steps += static_cast<long>(r.actions.size());
      ++solutions;
      if (!check_feasible(inst, r.solution).feasible()) ++violations;
    }
  }
  const auto models = shared.models ? *shared.models : random_models(9);
  int solve_bad = 0;
  for (std::uint64_t k = 0; k < 30; ++k) {
    const auto inst = generate_instance(5 + static_cast<int>(k), 500 + k);
    SolveOptions o;
    o.augmentations = 1 + static_cast<int>(k % 8);
    o.inference_steps = 5;
    o.seed = k;
    const auto r = solve(inst, models, o);
    if (!check_feasible(inst, r.solution).feasible()) ++solve_bad;
  }
  return {violations == 0 && solve_bad == 0,
          fmt("%.0f decoder steps over %.0f rollouts, %.0f infeasible rollouts, %.0f infeasible solve outputs",
              static_cast<double>(steps), solutions, violations, solve_bad) +
              fmt(", %.1f s", seconds_since(t0))};
}

// ---------------------------------------------------------------------------
// 8. Augmentation invariance

Verdict augmentation_invariance() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto inst = generate_instance(5 + static_cast<int>(rng() % 60), rng());
    Rng srng(rng());
    const auto sol = testing::random_solution(inst, srng);
    const GeometricTransform t{static_cast<int>(rng() % 8)};
    worst = std::max(worst, std::abs(tour_length(geometric_transform(inst, t), sol) - tour_length(inst, sol)));
  }
  int demand_bad = 0;
  const DemandStrategy strategies[] = {DemandStrategy::inversion, DemandStrategy::random_reassignment,
                                       DemandStrategy::cw_cyclic, DemandStrategy::ccw_cyclic};
  for (int k = 0; k < 500; ++k) {
    const auto inst = generate_instance(5 + static_cast<int>(rng() % 40), rng());
    const auto sol = savings_solve(inst);
    const auto permuted = demand_permute(inst, sol, strategies[k % 4], rng());
    if (!check_feasible(permuted, sol).feasible() || tour_length(permuted, sol) != tour_length(inst, sol)) ++demand_bad;
  }
  int matrix_bad = 0;
  for (const auto& rec : build_labeled_dataset(20, 9, 8, LabelSolver::brute_force)) {
    const auto base = from_solution(rec.instance, *rec.routes);
    for (const auto& v : augment8(rec.instance))
      if (from_solution(v, *rec.routes) != base) ++matrix_bad;
  }
  return {worst <= 1e-9 && demand_bad == 0 && matrix_bad == 0,
          fmt("max length drift %.2e, %.0f demand failures, %.0f matrix mismatches, %.2f s", worst, demand_bad,
              matrix_bad, seconds_since(t0))};
}

// ---------------------------------------------------------------------------
// 9. Best-of-A dominance

Verdict dominance(const Shared& shared) {
  const auto t0 = Clock::now();
  const auto models = shared.models ? *shared.models : random_models(19);
  int worse = 0, errors = 0;
  double sum1 = 0.0, sum8 = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    try {
      const auto inst = generate_instance(20, substream_seed(99, "dominance/" + std::to_string(k)));
      SolveOptions o;
      o.inference_steps = models.config.diffusion.inference_steps;
      o.seed = k;
      o.augmentations = 1;
      const double one = solve(inst, models, o).objective;
      o.augmentations = 8;
      const double eight = solve(inst, models, o).objective;
      sum1 += one;
      sum8 += eight;
      if (eight > one) ++worse;
    } catch (const std::exception&) {
      ++errors;
    }
  }
  return {worse == 0 && errors == 0, fmt("%.0f violations, %.0f exceptions, mean A=1 %.4f, A=8 %.4f", worse, errors,
                                         sum1 / 100, sum8 / 100) +
                                         fmt(", %.0f s", seconds_since(t0))};
}

// ---------------------------------------------------------------------------
// 10. Gap arithmetic through the report writer

Verdict gap_arithmetic() {
  EvalReport report;
  SolveResult r;
  r.objective = 10.41;
  report.results.push_back(r);
  report.summary = gap_report({10.41}, {10.36});
  const auto json = report.json(false);
  const auto at = json.find("\"gap\":");
  const double printed = std::stod(json.substr(at + 6));
  return {std::abs(printed - 0.48) <= 0.01 && std::abs(report.summary.mean_gap - 0.48) <= 0.01,
          fmt("gap %.4f%% (mean %.4f%%)", printed, report.summary.mean_gap)};
}

// ---------------------------------------------------------------------------
// 11. CVRPLIB fixture

Verdict parser_fixture() {
  const std::string dir = CVRPDIFF_TEST_DATA;
  const auto parsed = parse_cvrplib(read_file(dir + "/A-n44-k6.vrp"));
  const auto cost = parse_solution_cost(read_file(dir + "/A-n44-k6.sol"));
  const bool ok = parsed.instance.size() == 43 && parsed.raw.size() == 44 && cost && *cost == 937.0;
  return {ok, fmt("%.0f customers + depot, optimum %.0f", parsed.instance.size(), cost ? *cost : -1.0)};
}

// ---------------------------------------------------------------------------
// 12. Determinism of every command

struct Command {
  std::string name, args;
  std::vector<std::string> outputs;
};

Verdict determinism() {
#ifdef CVRPDIFF_CLI
  const auto t0 = Clock::now();
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / ("cvrpdiff_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string cfg = (root / "desk.cfg").string();
  auto in = [&](int run, const std::string& f) { return (root / std::to_string(run) / f).string(); };
  std::string detail;
  std::vector<std::vector<std::string>> contents(2);
  for (int run = 0; run < 2; ++run) {
    fs::create_directories(root / std::to_string(run));
    write_file_atomic(cfg, "model.d = 16\nmodel.heads = 4\nmodel.gat_layers = 2\nmodel.denoiser_layers = 2\n"
                           "model.encoder_layers = 2\ndiffusion.T = 50\ndiffusion.epochs = 3\ndiffusion.batch = 8\n"
                           "diffusion.inference_steps = 5\npolicy.epochs = 2\npolicy.batch = 8\npolicy.mask_steps = 5\n");
    const std::vector<Command> commands{
        {"gen", "gen --n 8 --count 24 --seed 5 --out " + in(run, "d.jsonl"), {"d.jsonl"}},
        {"label", "label --in " + in(run, "d.jsonl") + " --solver brute --out " + in(run, "l.jsonl"), {"l.jsonl"}},
        {"train-diffusion",
         "train-diffusion --data " + in(run, "l.jsonl") + " --config " + cfg + " --seed 2 --ckpt-out " + in(run, "a.cvd"),
         {"a.cvd", "a.cvd.report.json"}},
        {"train-policy",
         "train-policy --data " + in(run, "d.jsonl") + " --config " + cfg + " --seed 2 --diffusion-ckpt " +
             in(run, "a.cvd") + " --ckpt-out " + in(run, "b.cvd"),
         {"b.cvd", "b.cvd.report.json"}},
        {"solve", "solve --ckpt " + in(run, "b.cvd") + " --in " + in(run, "d.jsonl") + " --aug 8 --out " + in(run, "s.json"),
         {"s.json"}},
        {"eval",
         "eval --ckpt " + in(run, "b.cvd") + " --in " + in(run, "l.jsonl") + " --ref-solver brute --out " + in(run, "e"),
         {"e.csv", "e.json"}},
    };
    for (const auto& c : commands) {
      const std::string cmd = std::string(CVRPDIFF_CLI) + " " + c.args + " >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        fs::remove_all(root);
        return {false, c.name + " failed"};
      }
      for (const auto& f : c.outputs) contents[static_cast<std::size_t>(run)].push_back(read_file(in(run, f)));
    }
  }
  int differing = 0;
  for (std::size_t k = 0; k < contents[0].size(); ++k)
    if (contents[0][k] != contents[1][k]) ++differing;
  fs::remove_all(root);
  return {differing == 0, fmt("%.0f of %.0f output files differ across reruns, %.1f s", differing,
                              static_cast<double>(contents[0].size()), seconds_since(t0))};
#else
  return {false, "command-line tool not built"};
#endif
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string part;
      while (std::getline(ss, part, ',')) only.insert(std::stoi(part));
    }
  }
  Shared shared;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"diffusion analytics", diffusion_analytics},
      {"schedule endpoint", schedule_endpoint},
      {"constraint matrix example", constraint_example},
      {"gradient checks", gradient_checks},
      {"diffusion desk training", [&] { return diffusion_training(shared); }},
      {"policy desk training", [&] { return policy_training(shared); }},
      {"feasibility fuzzing", [&] { return feasibility_fuzz(shared); }},
      {"augmentation invariance", augmentation_invariance},
      {"best-of-A dominance", [&] { return dominance(shared); }},
      {"gap arithmetic", gap_arithmetic},
      {"CVRPLIB parser", parser_fixture},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s [%2d] %s: %s\n", v.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
