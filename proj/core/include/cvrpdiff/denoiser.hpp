#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cvrpdiff/constraint_matrix.hpp"
#include "cvrpdiff/diffusion.hpp"
#include "cvrpdiff/encoder.hpp"
#include "cvrpdiff/linalg.hpp"
#include "cvrpdiff/model.hpp"
#include "cvrpdiff/nn/layers.hpp"

namespace cvrpdiff {

// Sinusoidal embedding: entry 2i = sin(t w_i), 2i+1 = cos(t w_i) with
// w_i = 10000^(-2i/d). Throws InputError for odd d or negative t.
RowVector timestep_embedding(int t, int d);

struct DenoiserParams {
  struct Layer {
    nn::Linear w1, w2, w3, w4, w5;
    nn::Mlp2 edge_mlp, time_mlp;
    nn::BatchNorm edge_norm, node_norm;
  };

  int d = 0, layers = 0;
  nn::ParamSet params;
  nn::Linear edge_input;  // one-hot state -> d
  std::vector<Layer> blocks;
  nn::Linear head;  // d -> 2 logits

  DenoiserParams() = default;
  DenoiserParams(const ModelConfig& config, std::uint64_t seed);
};

// Index tables for `count` graphs of n customers with edges stored row-major
// per graph (row g*n*n + i*n + j).
struct EdgeLayout {
  int count = 1;
  int n = 0;
  std::vector<int> source;     // node row of i
  std::vector<int> target;     // node row of j
  std::vector<int> transpose;  // edge row of (j, i)
  std::vector<int> graph;      // graph of the edge
  std::vector<double> off_diagonal;  // 1 if i != j

  EdgeLayout(int count, int n);
  int edges() const { return count * n * n; }
};

// One anisotropic gated layer. h has count*n rows, e has count*n*n rows and
// time_features holds one embedding row per graph.
std::pair<nn::Var, nn::Var> denoiser_layer(nn::Binder& bind, nn::Var h, nn::Var e, nn::Var time_features,
                                           const EdgeLayout& layout, const DenoiserParams& params, int layer);
// Single-graph, inference-mode version: h is N x d, e is (N*N) x d.
std::pair<Matrix, Matrix> denoiser_layer(const Matrix& h, const Matrix& e, const RowVector& t_emb,
                                         const DenoiserParams& params, int layer);

// Symmetrised 2-class edge logits, (count*n*n) x 2. `h0` holds the customer
// rows of the GAT output, `xt` the stacked one-hot states and `t` one
// timestep per graph.
nn::Var denoiser_logits(nn::Binder& bind, nn::Var h0, const Matrix& xt, const std::vector<int>& t,
                        const EdgeLayout& layout, const DenoiserParams& params);
// Probability of state 1 for every edge of every graph (zero diagonal).
std::vector<EdgeProbabilities> edge_probabilities(const Matrix& logits, const EdgeLayout& layout);
// Rows of the customer nodes (1..N of each graph) in a stacked GAT output.
std::vector<int> customer_rows(const GraphBatch& batch);

// x0 cross-entropy over the strict upper triangle of each graph, averaged
// over all graphs, as a tape scalar.
nn::Var denoiser_loss(nn::Var logits, const std::vector<ConstraintMatrix>& truth, const EdgeLayout& layout);

// h0 is the (N+1) x d GAT output for `instance`.
EdgeProbabilities predict_x0(const CvrpInstance& instance, const Matrix& h0, const EdgeState& xt, int t,
                             const DenoiserParams& params);

}  // namespace cvrpdiff
