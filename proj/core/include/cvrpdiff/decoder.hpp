#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cvrpdiff/constraint_matrix.hpp"
#include "cvrpdiff/encoder.hpp"
#include "cvrpdiff/instance.hpp"
#include "cvrpdiff/linalg.hpp"
#include "cvrpdiff/model.hpp"
#include "cvrpdiff/nn/layers.hpp"

namespace cvrpdiff {

struct DecoderParams {
  int d = 0, heads = 0;
  double clip = 10.0;
  nn::ParamSet params;
  nn::Mlp2 capacity;  // RC/Q -> d
  nn::Linear local_q, local_k, local_v;
  nn::Linear global_q, global_k, global_v;
  nn::Mlp2 aux;
  nn::Linear final_q, final_k;

  DecoderParams() = default;
  DecoderParams(const ModelConfig& config, std::uint64_t seed);
};

inline constexpr double kSavingsEps = 1e-6;

// dist(0,i) + dist(0,j) - dist(i,j).
double saving(const CvrpInstance& instance, int i, int j);
// log(max(saving, eps)) for two customers, 0 when either node is the depot.
double savings_bias(const CvrpInstance& instance, int last, int j);

struct DecoderState {
  std::vector<std::uint8_t> visited;  // indexed by node, entry 0 unused
  int visited_count = 0;
  int last_node = 0;
  int remaining = 0;  // RC_t
  int capacity = 0;   // Q
  int step = 0;
  CvrpSolution solution;        // closed routes
  std::vector<int> open_route;  // customers of the route in progress

  static DecoderState initial(const CvrpInstance& instance);
  int customers() const { return static_cast<int>(visited.size()) - 1; }
  bool terminated() const { return visited_count == customers() && last_node == 0; }
  // Moves to `node`; throws ModelError if the move is not feasible.
  void apply(const CvrpInstance& instance, int node);
};

// Fresh state that has already visited `start_node` from the depot.
DecoderState start_state(const CvrpInstance& instance, int start_node);

// Entry j (0..N) is 1 when node j may be chosen next. Throws ModelError on a
// terminated state.
std::vector<std::uint8_t> feasible_actions(const DecoderState& state, const CvrpInstance& instance);
// Candidates of the local pointer: feasible customers linked to the last
// node by the mask plus the depot; every feasible customer when at the depot.
std::vector<std::uint8_t> local_candidates(const DecoderState& state, const CvrpInstance& instance,
                                           const ConstraintMatrix& mask);

// Static per-node decoder inputs MLP(h_local + h_global); fixed for an
// instance.
Matrix static_embeddings(const EncoderOutput& enc, const DecoderParams& params);

// (global, local) context: h_0 + h_last + [RO] + MLP(RC / Q) over the
// masked-branch embeddings.
std::pair<RowVector, RowVector> context_vectors(const DecoderState& state, const EncoderOutput& enc,
                                                const DecoderParams& params);

struct PointerContext {
  RowVector context;         // MLP(h_local_ctx) + local pointer + global pointer
  RowVector pointer_sum;     // local pointer + global pointer
  Matrix local_weights;      // heads x (N+1)
  Matrix global_weights;     // heads x (N+1)
};

PointerContext dual_pointer_context(const DecoderState& state, const EncoderOutput& enc, const ConstraintMatrix& mask,
                                    const CvrpInstance& instance, const DecoderParams& params);

// Distribution over nodes 0..N. `logits` receives C * tanh(u) for feasible
// nodes and -inf elsewhere when non-null.
std::vector<double> step_distribution(const DecoderState& state, const EncoderOutput& enc, const ConstraintMatrix& mask,
                                      const CvrpInstance& instance, const DecoderParams& params,
                                      std::vector<double>* logits = nullptr);

enum class DecodeMode { greedy, sample };

struct RolloutResult {
  CvrpSolution solution;
  std::vector<int> actions;       // chosen nodes after the start node
  std::vector<double> log_probs;  // one per action
  double log_prob() const;
};

// Decodes from `start_node`. Greedy picks the most probable node (lowest
// index on ties); sampling draws from substream "rollout/<start>" of
// `seed`. A non-null `forced` replays the given action sequence.
RolloutResult rollout(const CvrpInstance& instance, const EncoderOutput& enc, const ConstraintMatrix& mask,
                      const DecoderParams& params, int start_node, DecodeMode mode, std::uint64_t seed,
                      const std::vector<int>* forced = nullptr);

struct RolloutJob {
  int graph = 0;
  int start = 1;
  std::uint64_t seed = 0;  // seed of this rollout's own random stream
  const std::vector<int>* forced = nullptr;
};

struct BatchRollout {
  std::vector<RolloutResult> results;  // one per job
  nn::Var log_prob;                    // jobs x 1, summed chosen log-probabilities
};

// Runs every job in lock step on one tape. Graph g of the batch is
// instances[g] with mask masks[g] and the rows of `enc` belonging to it.
BatchRollout rollout_batch(nn::Binder& bind, const std::vector<const CvrpInstance*>& instances,
                           const std::vector<ConstraintMatrix>& masks, const EncodedBatch& enc,
                           const std::vector<RolloutJob>& jobs, DecodeMode mode, const DecoderParams& params);

// Wraps single-graph encoder output as tape constants.
EncodedBatch constant_encoding(nn::Tape& tape, const EncoderOutput& enc);

}  // namespace cvrpdiff
