#pragma once

#include <cstdint>
#include <vector>

#include "cvrpdiff/constraint_matrix.hpp"
#include "cvrpdiff/instance.hpp"
#include "cvrpdiff/linalg.hpp"
#include "cvrpdiff/model.hpp"
#include "cvrpdiff/nn/layers.hpp"

namespace cvrpdiff {

inline constexpr int kNodeFeatures = 3;

// Row 0 is the depot (x, y, 0); row i is (x_i, y_i, demand_i / Q).
Matrix node_features(const CvrpInstance& instance);

// Rows of `count` equally sized graphs stacked one after another.
struct GraphBatch {
  int count = 1;
  int nodes = 0;
  int rows() const { return count * nodes; }
};

// Attention + residual + batch norm: h' = BN(h + O(MHA(h))), with O the
// identity when `out` is absent.
struct AttentionBlock {
  nn::Linear q, k, v, out;
  nn::BatchNorm norm;

  static AttentionBlock make(nn::ParamSet& params, const std::string& name, int d, bool out_projection, Rng& rng);
  nn::Var operator()(nn::Binder& bind, nn::Var h, const std::vector<std::uint8_t>& allowed, int heads,
                     Matrix* weights = nullptr) const;
};

struct GatParams {
  int d = 0, heads = 0, layers = 0;
  nn::ParamSet params;
  nn::Linear input;
  std::vector<AttentionBlock> blocks;

  GatParams() = default;
  GatParams(const ModelConfig& config, std::uint64_t seed);
};

struct MaskedEncoderParams {
  int d = 0, heads = 0, layers = 0;
  nn::ParamSet params;
  nn::Linear input;
  std::vector<AttentionBlock> blocks;
  nn::Mlp2 fusion;

  MaskedEncoderParams() = default;
  MaskedEncoderParams(const ModelConfig& config, std::uint64_t seed);
};

struct EncoderOutput {
  Matrix h_global;         // (N+1) x d
  Matrix h_local;          // (N+1) x d
  Matrix h_fused;          // (N+1) x d, MLP(h_local + h_global)
  RowVector graph_embedding;  // mean of h_fused rows
};

// Full attention inside each graph of the batch.
std::vector<std::uint8_t> dense_allowed(const GraphBatch& batch);
// Attention pattern of the masked branch for one graph with N customers:
// every node attends to itself, a customer also to the depot and to the
// customers its mask row marks. The depot attends only to itself.
std::vector<std::uint8_t> masked_allowed(const ConstraintMatrix& mask);
// Block-diagonal combination of per-graph patterns.
std::vector<std::uint8_t> block_allowed(const std::vector<std::vector<std::uint8_t>>& blocks, int nodes);

nn::Var gat_forward(nn::Binder& bind, nn::Var features, const GraphBatch& batch, const GatParams& params);
Matrix gat_forward(const Matrix& features, const GatParams& params);

nn::Var masked_attention_layer(nn::Binder& bind, nn::Var h, const std::vector<std::uint8_t>& allowed,
                               const MaskedEncoderParams& params, int layer, Matrix* weights = nullptr);
// Single-graph evaluation with inference-mode normalisation. `weights`
// receives the (N+1) x (heads * (N+1)) attention weights when non-null.
Matrix masked_attention_layer(const Matrix& h, const ConstraintMatrix& mask, const MaskedEncoderParams& params,
                              int layer, Matrix* weights = nullptr);

struct EncodedBatch {
  nn::Var h_global, h_local, h_fused;
  nn::Var graph;  // count x d
};

// The global branch is evaluated as a constant (frozen); the masked branch
// and fusion record on `bind`'s tape.
EncodedBatch encode(nn::Binder& bind, const Matrix& features, const std::vector<ConstraintMatrix>& masks,
                    const GraphBatch& batch, const GatParams& gat, const MaskedEncoderParams& params);
EncoderOutput encode(const CvrpInstance& instance, const ConstraintMatrix& mask, const GatParams& gat,
                     const MaskedEncoderParams& params);

}  // namespace cvrpdiff
