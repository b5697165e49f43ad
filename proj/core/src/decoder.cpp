#include "cvrpdiff/decoder.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff {

using nn::Var;

DecoderParams::DecoderParams(const ModelConfig& config, std::uint64_t seed)
    : d(config.d), heads(config.heads), clip(config.clip) {
  config.validate();
  Rng rng = substream(seed, "init/decoder");
  capacity = nn::Mlp2::make(params, "capacity", 1, d, d, rng);
  local_q = nn::Linear::make(params, "local.q", d, d, false, rng);
  local_k = nn::Linear::make(params, "local.k", d, d, false, rng);
  local_v = nn::Linear::make(params, "local.v", d, d, false, rng);
  global_q = nn::Linear::make(params, "global.q", d, d, false, rng);
  global_k = nn::Linear::make(params, "global.k", d, d, false, rng);
  global_v = nn::Linear::make(params, "global.v", d, d, false, rng);
  aux = nn::Mlp2::make(params, "aux", d, d, d, rng);
  final_q = nn::Linear::make(params, "final.q", d, d, false, rng);
  final_k = nn::Linear::make(params, "final.k", d, d, false, rng);
}

double saving(const CvrpInstance& instance, int i, int j) {
  return instance.dist(0, i) + instance.dist(0, j) - instance.dist(i, j);
}

double savings_bias(const CvrpInstance& instance, int last, int j) {
  if (last == 0 || j == 0) return 0.0;
  return std::log(std::max(saving(instance, last, j), kSavingsEps));
}

DecoderState DecoderState::initial(const CvrpInstance& instance) {
  DecoderState s;
  s.visited.assign(static_cast<std::size_t>(instance.size()) + 1, 0);
  s.remaining = instance.capacity;
  s.capacity = instance.capacity;
  return s;
}

void DecoderState::apply(const CvrpInstance& instance, int node) {
  if (node < 0 || node > customers()) throw ModelError("action out of range: " + std::to_string(node));
  if (node == 0) {
    if (last_node == 0) throw ModelError("depot chosen while at the depot");
    solution.routes.push_back(std::move(open_route));
    open_route.clear();
    remaining = capacity;
  } else {
    if (visited[static_cast<std::size_t>(node)]) throw ModelError("customer visited twice: " + std::to_string(node));
    if (instance.demand(node) > remaining) throw ModelError("capacity exceeded at customer " + std::to_string(node));
    visited[static_cast<std::size_t>(node)] = 1;
    ++visited_count;
    remaining -= instance.demand(node);
    open_route.push_back(node);
  }
  last_node = node;
  ++step;
}

DecoderState start_state(const CvrpInstance& instance, int start_node) {
  if (start_node < 1 || start_node > instance.size()) throw ModelError("start node must be a customer");
  auto s = DecoderState::initial(instance);
  s.apply(instance, start_node);
  return s;
}

std::vector<std::uint8_t> feasible_actions(const DecoderState& state, const CvrpInstance& instance) {
  if (state.terminated()) throw ModelError("decoding already terminated");
  const int n = state.customers();
  std::vector<std::uint8_t> a(static_cast<std::size_t>(n) + 1, 0);
  bool any = false;
  for (int j = 1; j <= n; ++j)
    if (!state.visited[static_cast<std::size_t>(j)] && instance.demand(j) <= state.remaining) {
      a[static_cast<std::size_t>(j)] = 1;
      any = true;
    }
  if (state.last_node != 0) a[0] = 1;
  if (!any && state.last_node == 0) throw ModelError("no feasible action: a demand exceeds the capacity");
  return a;
}

std::vector<std::uint8_t> local_candidates(const DecoderState& state, const CvrpInstance& instance,
                                           const ConstraintMatrix& mask) {
  auto a = feasible_actions(state, instance);
  const int last = state.last_node;
  if (last == 0) return a;
  for (int j = 1; j < static_cast<int>(a.size()); ++j)
    if (a[j] && !mask.linked(last, j)) a[j] = 0;
  a[0] = 1;
  return a;
}

EncodedBatch constant_encoding(nn::Tape& tape, const EncoderOutput& enc) {
  return {tape.constant(enc.h_global), tape.constant(enc.h_local), tape.constant(enc.h_fused),
          tape.constant(enc.graph_embedding)};
}

Matrix static_embeddings(const EncoderOutput& enc, const DecoderParams& params) {
  if (enc.h_fused.cols() != params.d) throw ModelError("encoder width does not match the decoder");
  return enc.h_fused;
}

namespace {

struct Keys {
  Var final_kt, local_k, local_v, global_k, global_v;
};

Keys precompute_keys(nn::Binder& bind, const EncodedBatch& enc, const DecoderParams& p) {
  return {nn::transpose(p.final_k(bind, enc.h_fused)), p.local_k(bind, enc.h_fused), p.local_v(bind, enc.h_fused),
          p.global_k(bind, enc.h_fused), p.global_v(bind, enc.h_fused)};
}

// Per-row inputs of one decoding step. Allowed patterns span every node of
// the batch (rows x count*nodes).
struct StepRows {
  std::vector<int> depot_row, last_row, graph;
  Matrix rc;  // rows x 1, RC / Q
  std::vector<std::uint8_t> local, global, feasible;
  Matrix savings;

  StepRows(std::size_t rows, int total_nodes)
      : rc(static_cast<Eigen::Index>(rows), 1),
        local(rows * static_cast<std::size_t>(total_nodes), 0),
        global(rows * static_cast<std::size_t>(total_nodes), 0),
        feasible(rows * static_cast<std::size_t>(total_nodes), 0),
        savings(Matrix::Zero(static_cast<Eigen::Index>(rows), total_nodes)) {}
};

// Fills row r for a live state of graph g.
void fill_row(StepRows& rows, std::size_t r, int g, int nodes, int total_nodes, const DecoderState& state,
              const CvrpInstance& instance, const ConstraintMatrix& mask) {
  const auto base = r * static_cast<std::size_t>(total_nodes) + static_cast<std::size_t>(g * nodes);
  rows.depot_row.push_back(g * nodes);
  rows.graph.push_back(g);
  rows.rc(static_cast<Eigen::Index>(r), 0) = static_cast<double>(state.remaining) / state.capacity;
  if (state.terminated()) {
    rows.last_row.push_back(g * nodes);
    rows.local[base] = rows.global[base] = rows.feasible[base] = 1;
    return;
  }
  rows.last_row.push_back(g * nodes + state.last_node);
  const auto f = feasible_actions(state, instance);
  const auto l = local_candidates(state, instance, mask);
  for (int j = 0; j < nodes; ++j) {
    rows.feasible[base + j] = rows.global[base + j] = f[static_cast<std::size_t>(j)];
    rows.local[base + j] = l[static_cast<std::size_t>(j)];
    if (f[static_cast<std::size_t>(j)])
      rows.savings(static_cast<Eigen::Index>(r), g * nodes + j) = savings_bias(instance, state.last_node, j);
  }
}

struct StepVars {
  Var ctx_local, ctx_global, pointer_sum, context, logits, log_probs;
  Matrix local_weights, global_weights;
};

StepVars step_forward(nn::Binder& bind, const EncodedBatch& enc, const Keys& keys, const StepRows& rows,
                      const DecoderParams& p) {
  nn::Tape& tape = bind.tape();
  StepVars s;
  Var cap = p.capacity(bind, tape.constant(rows.rc));
  s.ctx_local = nn::add(nn::add(nn::gather_rows(enc.h_local, rows.depot_row), nn::gather_rows(enc.h_local, rows.last_row)),
                        cap);
  s.ctx_global = nn::add(s.ctx_local, nn::gather_rows(enc.graph, rows.graph));
  Var local = nn::attention(p.local_q(bind, s.ctx_local), keys.local_k, keys.local_v, rows.local, p.heads,
                            &s.local_weights);
  Var global = nn::attention(p.global_q(bind, s.ctx_global), keys.global_k, keys.global_v, rows.global, p.heads,
                             &s.global_weights);
  s.pointer_sum = nn::add(local, global);
  s.context = nn::add(p.aux(bind, s.ctx_local), s.pointer_sum);
  Var u = nn::add_const(nn::scale(nn::matmul(p.final_q(bind, s.context), keys.final_kt), 1.0 / std::sqrt(p.d)),
                        rows.savings);
  s.logits = nn::scale(nn::tanh(u), p.clip);
  s.log_probs = nn::masked_log_softmax(s.logits, rows.feasible);
  return s;
}

// Single-state evaluation over a one-graph encoding.
StepVars single_step(nn::Tape& tape, const DecoderState& state, const EncoderOutput& enc, const ConstraintMatrix& mask,
                     const CvrpInstance& instance, const DecoderParams& params) {
  if (state.terminated()) throw ModelError("decoding already terminated");
  if (enc.h_local.rows() != instance.size() + 1 || mask.size() != instance.size())
    throw ModelError("encoder output or mask does not match the instance");
  nn::Binder bind(tape, params.params);
  const auto encb = constant_encoding(tape, enc);
  const auto keys = precompute_keys(bind, encb, params);
  const int nodes = instance.size() + 1;
  StepRows rows(1, nodes);
  fill_row(rows, 0, 0, nodes, nodes, state, instance, mask);
  return step_forward(bind, encb, keys, rows, params);
}

}  // namespace

std::pair<RowVector, RowVector> context_vectors(const DecoderState& state, const EncoderOutput& enc,
                                                const DecoderParams& params) {
  if (enc.h_local.cols() != params.d) throw ModelError("encoder width does not match the decoder");
  nn::Tape tape;
  nn::Binder bind(tape, params.params);
  Matrix rc(1, 1);
  rc(0, 0) = static_cast<double>(state.remaining) / state.capacity;
  const RowVector cap = params.capacity(bind, tape.constant(rc)).value();
  const RowVector local = enc.h_local.row(0) + enc.h_local.row(state.last_node) + cap;
  return {local + enc.graph_embedding, local};
}

PointerContext dual_pointer_context(const DecoderState& state, const EncoderOutput& enc, const ConstraintMatrix& mask,
                                    const CvrpInstance& instance, const DecoderParams& params) {
  nn::Tape tape;
  auto s = single_step(tape, state, enc, mask, instance, params);
  const auto nodes = enc.h_local.rows();
  PointerContext out{s.context.value(), s.pointer_sum.value(), Matrix(params.heads, nodes), Matrix(params.heads, nodes)};
  for (int h = 0; h < params.heads; ++h) {
    out.local_weights.row(h) = s.local_weights.block(0, h * nodes, 1, nodes);
    out.global_weights.row(h) = s.global_weights.block(0, h * nodes, 1, nodes);
  }
  return out;
}

std::vector<double> step_distribution(const DecoderState& state, const EncoderOutput& enc, const ConstraintMatrix& mask,
                                      const CvrpInstance& instance, const DecoderParams& params,
                                      std::vector<double>* logits) {
  nn::Tape tape;
  auto s = single_step(tape, state, enc, mask, instance, params);
  const auto& lp = s.log_probs.value();
  const auto feasible = feasible_actions(state, instance);
  std::vector<double> p(static_cast<std::size_t>(lp.cols()));
  if (logits) logits->assign(p.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = feasible[j] ? std::exp(lp(0, static_cast<Eigen::Index>(j))) : 0.0;
    if (logits && feasible[j]) (*logits)[j] = s.logits.value()(0, static_cast<Eigen::Index>(j));
  }
  return p;
}

double RolloutResult::log_prob() const { return std::accumulate(log_probs.begin(), log_probs.end(), 0.0); }

BatchRollout rollout_batch(nn::Binder& bind, const std::vector<const CvrpInstance*>& instances,
                           const std::vector<ConstraintMatrix>& masks, const EncodedBatch& enc,
                           const std::vector<RolloutJob>& jobs, DecodeMode mode, const DecoderParams& params) {
  if (instances.empty() || instances.size() != masks.size()) throw ModelError("one mask per instance is required");
  if (jobs.empty()) throw ModelError("no rollouts requested");
  const int nodes = instances.front()->size() + 1;
  for (std::size_t g = 0; g < instances.size(); ++g)
    if (instances[g]->size() + 1 != nodes || masks[g].size() + 1 != nodes)
      throw ModelError("batched instances must share one size");
  const int total = nodes * static_cast<int>(instances.size());
  if (enc.h_fused.rows() != total || enc.h_fused.cols() != params.d)
    throw ModelError("encoder output does not match the batch");

  nn::Tape& tape = bind.tape();
  const auto keys = precompute_keys(bind, enc, params);
  std::vector<DecoderState> states;
  std::vector<Rng> rngs;
  BatchRollout out;
  out.results.resize(jobs.size());
  for (const auto& job : jobs) {
    if (job.graph < 0 || job.graph >= static_cast<int>(instances.size())) throw ModelError("rollout graph out of range");
    states.push_back(start_state(*instances[static_cast<std::size_t>(job.graph)], job.start));
    rngs.emplace_back(job.seed);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Var total_log_prob;
  const int max_steps = 2 * nodes + 2;
  for (int step = 0;; ++step) {
    bool live = false;
    for (const auto& s : states) live = live || !s.terminated();
    if (!live) break;
    if (step > max_steps) throw ModelError("decoding did not terminate");

    StepRows rows(jobs.size(), total);
    for (std::size_t r = 0; r < jobs.size(); ++r) {
      const auto g = static_cast<std::size_t>(jobs[r].graph);
      fill_row(rows, r, jobs[r].graph, nodes, total, states[r], *instances[g], masks[g]);
    }
    const auto sv = step_forward(bind, enc, keys, rows, params);
    const auto& lp = sv.log_probs.value();

    std::vector<std::pair<int, int>> picks;
    for (std::size_t r = 0; r < jobs.size(); ++r) {
      const int base = jobs[r].graph * nodes;
      const auto ri = static_cast<Eigen::Index>(r);
      auto& state = states[r];
      if (state.terminated()) {
        picks.emplace_back(static_cast<int>(r), base);
        continue;
      }
      int action = -1;
      if (jobs[r].forced) {
        const auto& f = *jobs[r].forced;
        const auto k = out.results[r].actions.size();
        if (k >= f.size()) throw ModelError("forced action sequence is too short");
        action = f[k];
        if (action < 0 || action >= nodes || !rows.feasible[r * static_cast<std::size_t>(total) + base + action])
          throw ModelError("forced action is not feasible: " + std::to_string(action));
      } else if (mode == DecodeMode::greedy) {
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < nodes; ++j)
          if (lp(ri, base + j) > best) {
            best = lp(ri, base + j);
            action = j;
          }
      } else {
        double u = unit(rngs[r]);
        for (int j = 0; j < nodes; ++j) {
          const double pj = std::exp(lp(ri, base + j));
          if (pj <= 0.0) continue;
          action = j;
          if ((u -= pj) < 0.0) break;
        }
      }
      picks.emplace_back(static_cast<int>(r), base + action);
      out.results[r].actions.push_back(action);
      out.results[r].log_probs.push_back(lp(ri, base + action));
      state.apply(*instances[static_cast<std::size_t>(jobs[r].graph)], action);
    }
    Var chosen = nn::pick_many(sv.log_probs, picks);
    total_log_prob = total_log_prob.valid() ? nn::add(total_log_prob, chosen) : chosen;
  }
  for (std::size_t r = 0; r < jobs.size(); ++r) out.results[r].solution = std::move(states[r].solution);
  out.log_prob = total_log_prob.valid() ? total_log_prob
                                        : tape.constant(Matrix::Zero(static_cast<Eigen::Index>(jobs.size()), 1));
  return out;
}

RolloutResult rollout(const CvrpInstance& instance, const EncoderOutput& enc, const ConstraintMatrix& mask,
                      const DecoderParams& params, int start_node, DecodeMode mode, std::uint64_t seed,
                      const std::vector<int>* forced) {
  nn::Tape tape;
  nn::Binder bind(tape, params.params);
  const auto encb = constant_encoding(tape, enc);
  RolloutJob job{0, start_node, substream_seed(seed, "rollout/" + std::to_string(start_node)), forced};
  auto res = rollout_batch(bind, {&instance}, {mask}, encb, {job}, mode, params);
  return std::move(res.results.front());
}

}  // namespace cvrpdiff
