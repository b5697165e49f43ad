#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvrpdiff/archive.hpp"
#include "cvrpdiff/config.hpp"
#include "cvrpdiff/constraint_matrix.hpp"
#include "cvrpdiff/dataset.hpp"
#include "cvrpdiff/decoder.hpp"
#include "cvrpdiff/denoiser.hpp"
#include "cvrpdiff/diffusion.hpp"
#include "cvrpdiff/encoder.hpp"

namespace cvrpdiff {

struct DiffusionModels {
  GatParams gat;
  DenoiserParams denoiser;
  NoiseSchedule schedule;

  DiffusionModels() = default;
  DiffusionModels(const TrainConfig& config, std::uint64_t seed);
};

struct PolicyModels {
  MaskedEncoderParams encoder;
  DecoderParams decoder;

  PolicyModels() = default;
  PolicyModels(const ModelConfig& config, std::uint64_t seed);
};

struct Models {
  TrainConfig config;
  DiffusionModels diffusion;
  PolicyModels policy;
};

// Sections "gat", "denoiser", "masked_encoder", "decoder" plus the config.
void store_diffusion(ParameterArchive& archive, const DiffusionModels& models);
void store_policy(ParameterArchive& archive, const PolicyModels& models);
// Rebuilds models sized by the archived config. Throws ModelError for a
// missing section or mismatched shapes.
DiffusionModels load_diffusion(const ParameterArchive& archive, const TrainConfig& config);
PolicyModels load_policy(const ParameterArchive& archive, const TrainConfig& config);
Models load_models(const ParameterArchive& archive);

struct MaskPrediction {
  ConstraintMatrix mask;
  EdgeProbabilities probabilities;  // x0 prediction of the last reverse step
};

// Reverse chain from a symmetric Bernoulli(0.5) state over
// make_inference_schedule(T, inference_steps); deterministic given seed.
MaskPrediction predict_mask(const CvrpInstance& instance, const DiffusionModels& models, int inference_steps,
                            std::uint64_t seed);
// Batched variant for equally sized instances, one seed per instance.
// Matches predict_mask up to floating-point rounding.
std::vector<MaskPrediction> predict_masks(const std::vector<const CvrpInstance*>& instances,
                                          const DiffusionModels& models, int inference_steps,
                                          const std::vector<std::uint64_t>& seeds, int batch_size = 64);

// All customers when N <= limit, otherwise the `limit` customers closest to
// the depot (ties by index), in index order.
std::vector<int> n_start(const CvrpInstance& instance, int limit = 100);

struct SolveOptions {
  int augmentations = 8;  // A, at most 8
  int starts_limit = 100;
  int inference_steps = 50;
  std::uint64_t seed = 0;
};

struct VariantResult {
  int variant = 0;
  int best_start = 0;
  double objective = 0.0;
  bool feasible = false;
  double wall_ms = 0.0;
  CvrpSolution solution;
};

struct SolveResult {
  CvrpSolution solution;
  double objective = 0.0;
  int variant = 0;
  int start = 0;
  std::vector<VariantResult> variants;
};

// Greedy multi-start decoding over the first A dihedral variants; each
// variant gets its own predicted mask (seed substream "variant/<a>"). The
// best tour wins with ties going to the lower variant, then start.
SolveResult solve(const CvrpInstance& instance, const Models& models, const SolveOptions& options);

struct GapSummary {
  std::vector<std::optional<double>> gaps;  // percent, empty without reference
  double mean_gap = 0.0;                    // percent
  double std_gap = 0.0;                     // population standard deviation
  double mean_obj = 0.0;                    // over every instance
  int count = 0;                            // instances with a reference
  int missing = 0;
};

// gap_i = 100 (obj_i - ref_i) / ref_i.
GapSummary gap_report(const std::vector<double>& objectives, const std::vector<std::optional<double>>& references);

struct EvalReport {
  std::vector<SolveResult> results;
  GapSummary summary;
  double total_ms = 0.0;

  // instance_id,variant,start,objective,feasible,wall_ms
  std::string csv(bool timing) const;
  // {mean_gap, std_gap, mean_obj, count, total_ms, missing, instances:[...]}
  std::string json(bool timing) const;
};

EvalReport evaluate(const std::vector<Record>& dataset, const Models& models,
                    const std::vector<std::optional<double>>& references, const SolveOptions& options);

}  // namespace cvrpdiff
