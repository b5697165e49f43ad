#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvrpdiff/config.hpp"
#include "cvrpdiff/dataset.hpp"
#include "cvrpdiff/nn/adam.hpp"
#include "cvrpdiff/pipeline.hpp"

namespace cvrpdiff {

struct TrainReport {
  std::vector<double> loss_curve;        // mean loss per epoch
  std::vector<double> reward_curve;      // mean sampled reward per epoch (policy)
  std::vector<double> validation_curve;  // validation metric per epoch
  int epochs_run = 0;
  int steps = 0;
  std::optional<int> early_stop_epoch;
  std::optional<double> validation_auc;         // diffusion
  std::optional<double> validation_before;      // policy: mean greedy objective
  std::optional<double> validation_after;

  std::string json() const;
  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

// Supervised x0 training of the GAT and denoiser on labeled instances of a
// single size. When `validation` is given, its mean AUC of predicted masks
// is reported.
DiffusionModels train_diffusion(const std::vector<Record>& data, const TrainConfig& config, std::uint64_t seed,
                                TrainReport* report = nullptr, const std::vector<Record>* validation = nullptr);

struct ReinforceStats {
  double loss = 0.0;
  double mean_reward = 0.0;
  std::vector<double> rewards;     // per rollout, -tour_length
  std::vector<double> advantages;  // reward minus its instance's mean
  std::vector<int> graph;          // instance of each rollout
  std::vector<int> start;
  std::vector<RolloutResult> rollouts;
};

// Self-critic surrogate -(1/R) sum adv * log p over R = sum of start counts.
// Gradients go into the given buffers; `forced` (one action list per
// rollout, in job order) replays fixed trajectories.
ReinforceStats reinforce_surrogate(const std::vector<const CvrpInstance*>& batch,
                                   const std::vector<ConstraintMatrix>& masks, const GatParams& gat,
                                   const PolicyModels& policy, std::uint64_t seed, int starts_limit,
                                   nn::GradBuffer* encoder_grads, nn::GradBuffer* decoder_grads, bool training,
                                   nn::BnRecorder* recorder = nullptr,
                                   const std::vector<std::vector<int>>* forced = nullptr);

struct PolicyOptimizer {
  nn::Adam encoder, decoder;
  PolicyOptimizer(const PolicyModels& policy, const PolicyTrainConfig& config);
};

// One sampled multi-start update of the masked encoder and decoder.
ReinforceStats reinforce_step(const std::vector<const CvrpInstance*>& batch, const std::vector<ConstraintMatrix>& masks,
                              const GatParams& gat, PolicyModels& policy, PolicyOptimizer& optimizer,
                              std::uint64_t seed, int starts_limit);

// Mean greedy single-variant multi-start objective under the given masks.
double greedy_objective(const std::vector<const CvrpInstance*>& instances, const std::vector<ConstraintMatrix>& masks,
                        const GatParams& gat, const PolicyModels& policy, int starts_limit);

// REINFORCE training with masks re-predicted every epoch by the frozen
// diffusion model. Returns the parameters with the best validation
// objective (the final ones without a validation set).
PolicyModels train_policy(const std::vector<Record>& data, const DiffusionModels& diffusion, const TrainConfig& config,
                          std::uint64_t seed, TrainReport* report = nullptr,
                          const std::vector<Record>* validation = nullptr);

}  // namespace cvrpdiff
