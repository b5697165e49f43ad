#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cvrpdiff/model.hpp"

namespace cvrpdiff {

struct DiffusionTrainConfig {
  int T = 1000;
  double beta1 = 1e-4;
  double betaT = 2e-2;
  int batch = 32;
  int epochs = 50;
  double lr = 1e-4;
  double weight_decay = 1e-6;
  int inference_steps = 50;  // T'
  bool symmetric = true;     // mirror corruption across the diagonal
  bool augment = false;      // random dihedral transform per training sample
  friend bool operator==(const DiffusionTrainConfig&, const DiffusionTrainConfig&) = default;
};

struct PolicyTrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-6;
  int batch = 32;         // B
  int epochs = 100;       // E
  int patience = 10;      // epochs without validation improvement
  int max_steps = 0;      // total update cap, 0 = none
  int starts_limit = 100;
  int mask_steps = 50;    // T' used for the masks of each epoch
  friend bool operator==(const PolicyTrainConfig&, const PolicyTrainConfig&) = default;
};

struct TrainConfig {
  ModelConfig model;
  DiffusionTrainConfig diffusion;
  PolicyTrainConfig policy;

  // Throws InputError for non-positive sizes or an invalid schedule.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// `key = value` lines; '#' starts a comment. Keys are the dotted field
// names, e.g. model.d, diffusion.T, policy.lr. Unset keys keep defaults.
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
TrainConfig read_config(const std::filesystem::path& path);
// Canonical text listing every key; parse_config(format_config(c)) == c.
std::string format_config(const TrainConfig& config);

}  // namespace cvrpdiff
