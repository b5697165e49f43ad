#pragma once

namespace cvrpdiff {

// Architecture sizes shared by every network.
struct ModelConfig {
  int d = 128;              // hidden width
  int heads = 8;            // attention heads (GAT, masked encoder, pointers)
  int gat_layers = 5;       // L'
  int denoiser_layers = 5;
  int encoder_layers = 5;   // L
  double clip = 10.0;       // C

  // Throws InputError unless every field is positive, d is even and
  // divisible by heads.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace cvrpdiff
