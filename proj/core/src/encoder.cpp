#include "cvrpdiff/encoder.hpp"

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff {

using nn::Var;

Matrix node_features(const CvrpInstance& instance) {
  const int n = instance.size();
  Matrix f(n + 1, kNodeFeatures);
  f.row(0) << instance.depot.x, instance.depot.y, 0.0;
  for (int i = 1; i <= n; ++i) {
    const auto& p = instance.node(i);
    f.row(i) << p.x, p.y, static_cast<double>(instance.demand(i)) / instance.capacity;
  }
  return f;
}

AttentionBlock AttentionBlock::make(nn::ParamSet& params, const std::string& name, int d, bool out_projection,
                                    Rng& rng) {
  AttentionBlock b;
  b.q = nn::Linear::make(params, name + ".q", d, d, false, rng);
  b.k = nn::Linear::make(params, name + ".k", d, d, false, rng);
  b.v = nn::Linear::make(params, name + ".v", d, d, false, rng);
  if (out_projection) b.out = nn::Linear::make(params, name + ".o", d, d, false, rng);
  b.norm = nn::BatchNorm::make(params, name + ".bn", d);
  return b;
}

Var AttentionBlock::operator()(nn::Binder& bind, Var h, const std::vector<std::uint8_t>& allowed, int heads,
                               Matrix* weights) const {
  Var a = nn::attention(q(bind, h), k(bind, h), v(bind, h), allowed, heads, weights);
  if (out.w != nn::kNoParam) a = out(bind, a);
  return norm(bind, nn::add(a, h));
}

GatParams::GatParams(const ModelConfig& config, std::uint64_t seed)
    : d(config.d), heads(config.heads), layers(config.gat_layers) {
  config.validate();
  Rng rng = substream(seed, "init/gat");
  input = nn::Linear::make(params, "input", kNodeFeatures, d, true, rng);
  for (int l = 0; l < layers; ++l)
    blocks.push_back(AttentionBlock::make(params, "layer" + std::to_string(l), d, true, rng));
}

MaskedEncoderParams::MaskedEncoderParams(const ModelConfig& config, std::uint64_t seed)
    : d(config.d), heads(config.heads), layers(config.encoder_layers) {
  config.validate();
  Rng rng = substream(seed, "init/masked_encoder");
  input = nn::Linear::make(params, "input", kNodeFeatures, d, true, rng);
  for (int l = 0; l < layers; ++l)
    blocks.push_back(AttentionBlock::make(params, "layer" + std::to_string(l), d, false, rng));
  fusion = nn::Mlp2::make(params, "fusion", d, d, d, rng);
}

std::vector<std::uint8_t> dense_allowed(const GraphBatch& batch) {
  const auto rows = static_cast<std::size_t>(batch.rows());
  if (batch.count == 1) return {};
  std::vector<std::uint8_t> a(rows * rows, 0);
  for (int b = 0; b < batch.count; ++b)
    for (int i = 0; i < batch.nodes; ++i)
      for (int j = 0; j < batch.nodes; ++j)
        a[static_cast<std::size_t>(b * batch.nodes + i) * rows + static_cast<std::size_t>(b * batch.nodes + j)] = 1;
  return a;
}

std::vector<std::uint8_t> masked_allowed(const ConstraintMatrix& mask) {
  const int n = mask.size() + 1;
  std::vector<std::uint8_t> a(static_cast<std::size_t>(n) * n, 0);
  auto at = [&](int i, int j) -> std::uint8_t& { return a[static_cast<std::size_t>(i) * n + j]; };
  at(0, 0) = 1;
  for (int i = 1; i < n; ++i) {
    at(i, 0) = 1;
    at(i, i) = 1;
    for (int j = 1; j < n; ++j)
      if (j != i && mask(i - 1, j - 1)) at(i, j) = 1;
  }
  return a;
}

std::vector<std::uint8_t> block_allowed(const std::vector<std::vector<std::uint8_t>>& blocks, int nodes) {
  if (blocks.size() == 1) return blocks.front();
  const auto rows = blocks.size() * static_cast<std::size_t>(nodes);
  const auto n = static_cast<std::size_t>(nodes);
  std::vector<std::uint8_t> a(rows * rows, 0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].size() != n * n) throw ModelError("attention block has the wrong size");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[(b * n + i) * rows + b * n + j] = blocks[b][i * n + j];
  }
  return a;
}

namespace {

void check_features(const Matrix& features, const GraphBatch& batch) {
  if (features.cols() != kNodeFeatures || features.rows() != batch.rows())
    throw ModelError("feature matrix must be " + std::to_string(batch.rows()) + " x " + std::to_string(kNodeFeatures));
}

}  // namespace

Var gat_forward(nn::Binder& bind, Var features, const GraphBatch& batch, const GatParams& params) {
  if (features.rows() != batch.rows() || features.cols() != kNodeFeatures)
    throw ModelError("GAT input has the wrong shape");
  const auto allowed = dense_allowed(batch);
  Var h = params.input(bind, features);
  for (const auto& block : params.blocks) h = block(bind, h, allowed, params.heads);
  return h;
}

Matrix gat_forward(const Matrix& features, const GatParams& params) {
  check_features(features, {1, static_cast<int>(features.rows())});
  nn::Tape tape;
  nn::Binder bind(tape, params.params);
  return gat_forward(bind, tape.constant(features), {1, static_cast<int>(features.rows())}, params).value();
}

Var masked_attention_layer(nn::Binder& bind, Var h, const std::vector<std::uint8_t>& allowed,
                           const MaskedEncoderParams& params, int layer, Matrix* weights) {
  if (layer < 0 || layer >= params.layers) throw ModelError("masked encoder layer out of range");
  if (h.cols() != params.d) throw ModelError("masked encoder input width mismatch");
  return params.blocks[static_cast<std::size_t>(layer)](bind, h, allowed, params.heads, weights);
}

Matrix masked_attention_layer(const Matrix& h, const ConstraintMatrix& mask, const MaskedEncoderParams& params,
                              int layer, Matrix* weights) {
  if (h.rows() != mask.size() + 1) throw ModelError("mask does not match the node count");
  nn::Tape tape;
  nn::Binder bind(tape, params.params);
  return masked_attention_layer(bind, tape.constant(h), masked_allowed(mask), params, layer, weights).value();
}

EncodedBatch encode(nn::Binder& bind, const Matrix& features, const std::vector<ConstraintMatrix>& masks,
                    const GraphBatch& batch, const GatParams& gat, const MaskedEncoderParams& params) {
  check_features(features, batch);
  if (static_cast<int>(masks.size()) != batch.count) throw ModelError("one mask per graph is required");
  if (gat.d != params.d) throw ModelError("GAT and masked encoder widths differ");
  std::vector<std::vector<std::uint8_t>> blocks;
  for (const auto& m : masks) {
    if (m.size() + 1 != batch.nodes) throw ModelError("mask does not match the node count");
    blocks.push_back(masked_allowed(m));
  }

  nn::Tape frozen;
  nn::Binder gat_bind(frozen, gat.params);
  Matrix global = gat_forward(gat_bind, frozen.constant(features), batch, gat).value();

  nn::Tape& tape = bind.tape();
  EncodedBatch out;
  out.h_global = tape.constant(std::move(global));
  const auto allowed = block_allowed(blocks, batch.nodes);
  Var h = params.input(bind, tape.constant(features));
  for (int l = 0; l < params.layers; ++l) h = masked_attention_layer(bind, h, allowed, params, l);
  out.h_local = h;
  out.h_fused = params.fusion(bind, nn::add(out.h_local, out.h_global));
  out.graph = nn::scale(nn::sum_row_groups(out.h_fused, batch.nodes), 1.0 / batch.nodes);
  return out;
}

EncoderOutput encode(const CvrpInstance& instance, const ConstraintMatrix& mask, const GatParams& gat,
                     const MaskedEncoderParams& params) {
  if (mask.size() != instance.size()) throw ModelError("mask does not match the instance size");
  nn::Tape tape;
  nn::Binder bind(tape, params.params);
  const GraphBatch batch{1, instance.size() + 1};
  auto enc = encode(bind, node_features(instance), {mask}, batch, gat, params);
  return {enc.h_global.value(), enc.h_local.value(), enc.h_fused.value(), enc.graph.value()};
}

}  // namespace cvrpdiff
