#include "cvrpdiff/denoiser.hpp"

#include <cmath>

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff {

using nn::Var;

RowVector timestep_embedding(int t, int d) {
  if (d <= 0 || d % 2 != 0) throw InputError("timestep embedding width must be positive and even");
  if (t < 0) throw InputError("timestep must be non-negative");
  RowVector e(d);
  for (int i = 0; i < d / 2; ++i) {
    const double w = std::pow(10000.0, -2.0 * i / d);
    e(2 * i) = std::sin(t * w);
    e(2 * i + 1) = std::cos(t * w);
  }
  return e;
}

DenoiserParams::DenoiserParams(const ModelConfig& config, std::uint64_t seed)
    : d(config.d), layers(config.denoiser_layers) {
  config.validate();
  Rng rng = substream(seed, "init/denoiser");
  edge_input = nn::Linear::make(params, "edge_input", 2, d, true, rng);
  for (int l = 0; l < layers; ++l) {
    const std::string p = "layer" + std::to_string(l);
    Layer b;
    b.w1 = nn::Linear::make(params, p + ".w1", d, d, false, rng);
    b.w2 = nn::Linear::make(params, p + ".w2", d, d, false, rng);
    b.w3 = nn::Linear::make(params, p + ".w3", d, d, false, rng);
    b.w4 = nn::Linear::make(params, p + ".w4", d, d, false, rng);
    b.w5 = nn::Linear::make(params, p + ".w5", d, d, false, rng);
    b.edge_mlp = nn::Mlp2::make(params, p + ".edge_mlp", d, d, d, rng);
    b.time_mlp = nn::Mlp2::make(params, p + ".time_mlp", d, d, d, rng);
    b.edge_norm = nn::BatchNorm::make(params, p + ".edge_bn", d);
    b.node_norm = nn::BatchNorm::make(params, p + ".node_bn", d);
    blocks.push_back(b);
  }
  head = nn::Linear::make(params, "head", d, 2, true, rng);
}

EdgeLayout::EdgeLayout(int count_, int n_) : count(count_), n(n_) {
  if (count <= 0 || n <= 0) throw ModelError("edge layout needs positive sizes");
  const auto total = static_cast<std::size_t>(edges());
  source.reserve(total);
  target.reserve(total);
  transpose.reserve(total);
  graph.reserve(total);
  off_diagonal.reserve(total);
  for (int g = 0; g < count; ++g)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        source.push_back(g * n + i);
        target.push_back(g * n + j);
        transpose.push_back(g * n * n + j * n + i);
        graph.push_back(g);
        off_diagonal.push_back(i == j ? 0.0 : 1.0);
      }
}

std::pair<Var, Var> denoiser_layer(nn::Binder& bind, Var h, Var e, Var time_features, const EdgeLayout& layout,
                                   const DenoiserParams& params, int layer) {
  if (layer < 0 || layer >= params.layers) throw ModelError("denoiser layer out of range");
  if (h.rows() != layout.count * layout.n || e.rows() != layout.edges() || h.cols() != params.d ||
      e.cols() != params.d || time_features.rows() != layout.count || time_features.cols() != params.d)
    throw ModelError("denoiser layer input shapes do not match");
  const auto& p = params.blocks[static_cast<std::size_t>(layer)];
  Var e_bar = nn::add(p.edge_mlp(bind, p.edge_norm(bind, e)),
                      nn::gather_rows(p.time_mlp(bind, time_features), layout.graph));
  Var e_new = nn::add(nn::add(nn::gather_rows(p.w1(bind, h), layout.source), nn::gather_rows(p.w2(bind, h), layout.target)),
                      p.w3(bind, e_bar));
  Var gate = nn::mul(nn::sigmoid(e_new), nn::gather_rows(p.w4(bind, h), layout.target));
  Var agg = nn::sum_row_groups(nn::scale_rows(gate, layout.off_diagonal), layout.n);
  Var h_new = nn::add(h, nn::relu(p.node_norm(bind, nn::add(p.w5(bind, h), agg))));
  return {h_new, e_new};
}

std::pair<Matrix, Matrix> denoiser_layer(const Matrix& h, const Matrix& e, const RowVector& t_emb,
                                         const DenoiserParams& params, int layer) {
  const auto n = static_cast<int>(h.rows());
  if (e.rows() != static_cast<Eigen::Index>(n) * n) throw ModelError("edge matrix must have N*N rows");
  nn::Tape tape;
  nn::Binder bind(tape, params.params);
  const EdgeLayout layout(1, n);
  auto [h2, e2] = denoiser_layer(bind, tape.constant(h), tape.constant(e), tape.constant(t_emb), layout, params, layer);
  return {h2.value(), e2.value()};
}

Var denoiser_logits(nn::Binder& bind, Var h0, const Matrix& xt, const std::vector<int>& t, const EdgeLayout& layout,
                    const DenoiserParams& params) {
  if (static_cast<int>(t.size()) != layout.count) throw ModelError("one timestep per graph is required");
  if (xt.rows() != layout.edges() || xt.cols() != 2) throw ModelError("edge state must be (count*N*N) x 2");
  if (h0.rows() != layout.count * layout.n || h0.cols() != params.d)
    throw ModelError("node embeddings do not match the denoiser width");
  nn::Tape& tape = bind.tape();
  Matrix times(layout.count, params.d);
  for (int g = 0; g < layout.count; ++g) times.row(g) = timestep_embedding(t[static_cast<std::size_t>(g)], params.d);
  Var tf = tape.constant(std::move(times));
  Var h = h0;
  Var e = params.edge_input(bind, tape.constant(xt));
  for (int l = 0; l < params.layers; ++l) std::tie(h, e) = denoiser_layer(bind, h, e, tf, layout, params, l);
  Var z = params.head(bind, e);
  return nn::scale(nn::add(z, nn::gather_rows(z, layout.transpose)), 0.5);
}

std::vector<EdgeProbabilities> edge_probabilities(const Matrix& logits, const EdgeLayout& layout) {
  std::vector<EdgeProbabilities> out;
  const int n = layout.n;
  for (int g = 0; g < layout.count; ++g) {
    EdgeProbabilities p = EdgeProbabilities::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto r = static_cast<Eigen::Index>(g) * n * n + i * n + j;
        p(i, j) = 1.0 / (1.0 + std::exp(logits(r, 0) - logits(r, 1)));
      }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<int> customer_rows(const GraphBatch& batch) {
  std::vector<int> rows;
  for (int g = 0; g < batch.count; ++g)
    for (int i = 1; i < batch.nodes; ++i) rows.push_back(g * batch.nodes + i);
  return rows;
}

Var denoiser_loss(Var logits, const std::vector<ConstraintMatrix>& truth, const EdgeLayout& layout) {
  if (static_cast<int>(truth.size()) != layout.count) throw ModelError("one target matrix per graph is required");
  std::vector<std::pair<int, int>> picks;
  const int n = layout.n;
  for (int g = 0; g < layout.count; ++g) {
    if (truth[static_cast<std::size_t>(g)].size() != n) throw ModelError("target matrix size mismatch");
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        picks.emplace_back(g * n * n + i * n + j, truth[static_cast<std::size_t>(g)](i, j) ? 1 : 0);
  }
  if (picks.empty()) throw ModelError("loss needs at least two customers");
  return nn::scale(nn::mean(nn::pick_many(nn::log_softmax(logits), picks)), -1.0);
}

EdgeProbabilities predict_x0(const CvrpInstance& instance, const Matrix& h0, const EdgeState& xt, int t,
                             const DenoiserParams& params) {
  const int n = instance.size();
  if (xt.bits.size() != n) throw ModelError("edge state does not match the instance size");
  if (h0.rows() != n + 1 || h0.cols() != params.d) throw ModelError("node embeddings must be (N+1) x d");
  nn::Tape tape;
  nn::Binder bind(tape, params.params);
  const EdgeLayout layout(1, n);
  Var h = tape.constant(h0.bottomRows(n));
  Var z = denoiser_logits(bind, h, xt.one_hot(), {t}, layout, params);
  return edge_probabilities(z.value(), layout).front();
}

}  // namespace cvrpdiff
