#include "cvrpdiff/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "cvrpdiff/augmentation.hpp"
#include "cvrpdiff/errors.hpp"

namespace cvrpdiff {

DiffusionModels::DiffusionModels(const TrainConfig& config, std::uint64_t seed)
    : gat(config.model, seed),
      denoiser(config.model, seed),
      schedule(make_schedule(config.diffusion.T, config.diffusion.beta1, config.diffusion.betaT)) {}

PolicyModels::PolicyModels(const ModelConfig& config, std::uint64_t seed) : encoder(config, seed), decoder(config, seed) {}

void store_diffusion(ParameterArchive& archive, const DiffusionModels& models) {
  archive.put("gat", models.gat.params);
  archive.put("denoiser", models.denoiser.params);
}

void store_policy(ParameterArchive& archive, const PolicyModels& models) {
  archive.put("masked_encoder", models.encoder.params);
  archive.put("decoder", models.decoder.params);
}

DiffusionModels load_diffusion(const ParameterArchive& archive, const TrainConfig& config) {
  DiffusionModels m(config, 0);
  archive.load_into("gat", m.gat.params);
  archive.load_into("denoiser", m.denoiser.params);
  return m;
}

PolicyModels load_policy(const ParameterArchive& archive, const TrainConfig& config) {
  PolicyModels m(config.model, 0);
  archive.load_into("masked_encoder", m.encoder.params);
  archive.load_into("decoder", m.decoder.params);
  return m;
}

Models load_models(const ParameterArchive& archive) {
  Models m;
  try {
    m.config = parse_config(archive.config_text);
    m.config.validate();
  } catch (const InputError& e) {
    throw ModelError(std::string("archived config is invalid: ") + e.what());
  }
  m.diffusion = load_diffusion(archive, m.config);
  m.policy = load_policy(archive, m.config);
  return m;
}

namespace {

EdgeState uniform_state(int n, int t, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  EdgeState s{ConstraintMatrix(n), t};
  for (int r = 0; r < n; ++r)
    for (int c = r + 1; c < n; ++c) {
      const bool v = coin(rng);
      s.bits.set(r, c, v);
      s.bits.set(c, r, v);
    }
  return s;
}

}  // namespace

std::vector<MaskPrediction> predict_masks(const std::vector<const CvrpInstance*>& instances,
                                          const DiffusionModels& models, int inference_steps,
                                          const std::vector<std::uint64_t>& seeds, int batch_size) {
  if (instances.size() != seeds.size()) throw ModelError("one seed per instance is required");
  if (batch_size < 1) throw ModelError("batch size must be positive");
  const auto schedule = make_inference_schedule(models.schedule.T, inference_steps);
  std::vector<MaskPrediction> out(instances.size());
  for (std::size_t lo = 0; lo < instances.size(); lo += static_cast<std::size_t>(batch_size)) {
    const auto hi = std::min(instances.size(), lo + static_cast<std::size_t>(batch_size));
    const int n = instances[lo]->size();
    const GraphBatch batch{static_cast<int>(hi - lo), n + 1};
    Matrix features(batch.rows(), kNodeFeatures);
    for (std::size_t i = lo; i < hi; ++i) {
      if (instances[i]->size() != n) throw ModelError("batched instances must share one size");
      features.middleRows(static_cast<Eigen::Index>(i - lo) * (n + 1), n + 1) = node_features(*instances[i]);
    }
    nn::Tape gat_tape;
    nn::Binder gat_bind(gat_tape, models.gat.params);
    const Matrix h_all = gat_forward(gat_bind, gat_tape.constant(features), batch, models.gat).value();
    Matrix h0(static_cast<Eigen::Index>(batch.count) * n, models.gat.d);
    const auto rows = customer_rows(batch);
    for (std::size_t r = 0; r < rows.size(); ++r) h0.row(static_cast<Eigen::Index>(r)) = h_all.row(rows[r]);

    const EdgeLayout layout(batch.count, n);
    std::vector<EdgeState> states;
    for (std::size_t i = lo; i < hi; ++i) states.push_back(uniform_state(n, models.schedule.T, substream_seed(seeds[i], "mask/init")));
    std::vector<EdgeProbabilities> probs;
    for (std::size_t k = 0; k < schedule.steps.size(); ++k) {
      const auto [t, t_prev] = schedule.steps[k];
      Matrix xt(layout.edges(), 2);
      for (int g = 0; g < batch.count; ++g)
        xt.middleRows(static_cast<Eigen::Index>(g) * n * n, static_cast<Eigen::Index>(n) * n) = states[static_cast<std::size_t>(g)].one_hot();
      nn::Tape tape;
      nn::Binder bind(tape, models.denoiser.params);
      const auto logits = denoiser_logits(bind, tape.constant(h0), xt, std::vector<int>(static_cast<std::size_t>(batch.count), t),
                                          layout, models.denoiser);
      probs = edge_probabilities(logits.value(), layout);
      for (int g = 0; g < batch.count; ++g) {
        const auto gi = static_cast<std::size_t>(g);
        const auto step_seed = substream_seed(seeds[lo + gi], "mask/step/" + std::to_string(k));
        states[gi] = reverse_step(states[gi], probs[gi], t, t_prev, models.schedule, step_seed, true);
      }
    }
    for (std::size_t g = 0; g < states.size(); ++g) out[lo + g] = {std::move(states[g].bits), std::move(probs[g])};
  }
  return out;
}

MaskPrediction predict_mask(const CvrpInstance& instance, const DiffusionModels& models, int inference_steps,
                            std::uint64_t seed) {
  return std::move(predict_masks({&instance}, models, inference_steps, {seed}, 1).front());
}

std::vector<int> n_start(const CvrpInstance& instance, int limit) {
  if (limit < 1) throw InputError("start limit must be positive");
  std::vector<int> nodes(static_cast<std::size_t>(instance.size()));
  std::iota(nodes.begin(), nodes.end(), 1);
  if (instance.size() <= limit) return nodes;
  std::stable_sort(nodes.begin(), nodes.end(),
                   [&](int a, int b) { return instance.dist(0, a) < instance.dist(0, b); });
  nodes.resize(static_cast<std::size_t>(limit));
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

SolveResult solve(const CvrpInstance& instance, const Models& models, const SolveOptions& options) {
  if (options.augmentations < 1 || options.augmentations > GeometricTransform::kCount)
    throw InputError("augmentations must be between 1 and 8");
  validate_instance(instance, true);
  const auto starts = n_start(instance, options.starts_limit);
  SolveResult result;
  bool have = false;
  for (int a = 0; a < options.augmentations; ++a) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto variant = geometric_transform(instance, GeometricTransform{a});
    const auto vseed = substream_seed(options.seed, "variant/" + std::to_string(a));
    const auto mask = predict_mask(variant, models.diffusion, options.inference_steps, vseed).mask;

    nn::Tape tape;
    nn::Binder bind(tape, models.policy.encoder.params);
    const GraphBatch batch{1, instance.size() + 1};
    const auto enc = encode(bind, node_features(variant), {mask}, batch, models.diffusion.gat, models.policy.encoder);
    std::vector<RolloutJob> jobs;
    for (int s : starts) jobs.push_back({0, s, 0, nullptr});
    nn::Binder dec_bind(tape, models.policy.decoder.params);
    const auto rolled = rollout_batch(dec_bind, {&variant}, {mask}, enc, jobs, DecodeMode::greedy, models.policy.decoder);

    VariantResult vr;
    vr.variant = a;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      const auto& sol = rolled.results[k].solution;
      const double obj = tour_length(instance, sol);
      if (k == 0 || obj < vr.objective) {
        vr.objective = obj;
        vr.best_start = jobs[k].start;
        vr.solution = sol;
      }
    }
    vr.feasible = check_feasible(instance, vr.solution).feasible();
    vr.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (vr.feasible && (!have || vr.objective < result.objective)) {
      have = true;
      result.objective = vr.objective;
      result.solution = vr.solution;
      result.variant = a;
      result.start = vr.best_start;
    }
    result.variants.push_back(std::move(vr));
  }
  if (!have) throw ModelError("no feasible solution was decoded");
  return result;
}

GapSummary gap_report(const std::vector<double>& objectives, const std::vector<std::optional<double>>& references) {
  if (objectives.size() != references.size()) throw InputError("one reference entry per objective is required");
  GapSummary s;
  double sum_obj = 0.0;
  std::vector<double> gaps;
  for (std::size_t i = 0; i < objectives.size(); ++i) {
    sum_obj += objectives[i];
    const auto& ref = references[i];
    if (!ref || !(*ref > 0.0)) {
      s.gaps.emplace_back();
      ++s.missing;
      continue;
    }
    const double g = 100.0 * (objectives[i] - *ref) / *ref;
    s.gaps.emplace_back(g);
    gaps.push_back(g);
  }
  s.count = static_cast<int>(gaps.size());
  if (!objectives.empty()) s.mean_obj = sum_obj / static_cast<double>(objectives.size());
  if (!gaps.empty()) {
    s.mean_gap = std::accumulate(gaps.begin(), gaps.end(), 0.0) / static_cast<double>(gaps.size());
    double var = 0.0;
    for (double g : gaps) var += (g - s.mean_gap) * (g - s.mean_gap);
    s.std_gap = std::sqrt(var / static_cast<double>(gaps.size()));
  }
  return s;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string EvalReport::csv(bool timing) const {
  std::string out = "instance_id,variant,start,objective,feasible,wall_ms\n";
  for (std::size_t i = 0; i < results.size(); ++i)
    for (const auto& v : results[i].variants)
      out += std::to_string(i) + ',' + std::to_string(v.variant) + ',' + std::to_string(v.best_start) + ',' +
             num(v.objective) + ',' + (v.feasible ? "true" : "false") + ',' + num(timing ? v.wall_ms : 0.0) + '\n';
  return out;
}

std::string EvalReport::json(bool timing) const {
  std::string out = "{\"mean_gap\":" + num(summary.mean_gap) + ",\"std_gap\":" + num(summary.std_gap) +
                    ",\"mean_obj\":" + num(summary.mean_obj) + ",\"count\":" + std::to_string(summary.count) +
                    ",\"total_ms\":" + num(timing ? total_ms : 0.0) + ",\"missing\":" + std::to_string(summary.missing) +
                    ",\"instances\":[";
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (i) out += ',';
    const auto& g = summary.gaps[i];
    out += "{\"instance_id\":" + std::to_string(i) + ",\"objective\":" + num(results[i].objective) +
           ",\"gap\":" + (g ? num(*g) : std::string("\"n/a\"")) + ",\"variant\":" + std::to_string(results[i].variant) +
           ",\"start\":" + std::to_string(results[i].start) + '}';
  }
  out += "]}\n";
  return out;
}

EvalReport evaluate(const std::vector<Record>& dataset, const Models& models,
                    const std::vector<std::optional<double>>& references, const SolveOptions& options) {
  if (references.size() != dataset.size()) throw InputError("one reference entry per instance is required");
  EvalReport report;
  std::vector<double> objectives;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    SolveOptions o = options;
    o.seed = substream_seed(options.seed, "instance/" + std::to_string(i));
    report.results.push_back(solve(dataset[i].instance, models, o));
    objectives.push_back(report.results.back().objective);
  }
  report.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  report.summary = gap_report(objectives, references);
  return report;
}

}  // namespace cvrpdiff
