#include "cvrpdiff/training.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>

#include "cvrpdiff/augmentation.hpp"
#include "cvrpdiff/errors.hpp"

namespace cvrpdiff {

using nn::Var;

std::string TrainReport::json() const {
  nlohmann::ordered_json j;
  j["loss_curve"] = loss_curve;
  j["reward_curve"] = reward_curve;
  j["validation_curve"] = validation_curve;
  j["epochs_run"] = epochs_run;
  j["steps"] = steps;
  j["early_stop_epoch"] = early_stop_epoch ? nlohmann::ordered_json(*early_stop_epoch) : nullptr;
  j["validation_auc"] = validation_auc ? nlohmann::ordered_json(*validation_auc) : nullptr;
  j["validation_before"] = validation_before ? nlohmann::ordered_json(*validation_before) : nullptr;
  j["validation_after"] = validation_after ? nlohmann::ordered_json(*validation_after) : nullptr;
  return j.dump(2) + "\n";
}

namespace {

int common_size(const std::vector<Record>& data) {
  if (data.empty()) throw InputError("training data is empty");
  const int n = data.front().instance.size();
  for (const auto& r : data)
    if (r.instance.size() != n) throw InputError("training instances must all have the same number of customers");
  return n;
}

Matrix stacked_features(const std::vector<const CvrpInstance*>& instances) {
  const int nodes = instances.front()->size() + 1;
  Matrix f(static_cast<Eigen::Index>(instances.size()) * nodes, kNodeFeatures);
  for (std::size_t i = 0; i < instances.size(); ++i)
    f.middleRows(static_cast<Eigen::Index>(i) * nodes, nodes) = node_features(*instances[i]);
  return f;
}

std::vector<const CvrpInstance*> pointers(const std::vector<Record>& data) {
  std::vector<const CvrpInstance*> out;
  for (const auto& r : data) out.push_back(&r.instance);
  return out;
}

std::vector<std::uint64_t> seeds_for(std::uint64_t seed, const std::string& prefix, std::size_t count) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(substream_seed(seed, prefix + std::to_string(i)));
  return out;
}

}  // namespace

DiffusionModels train_diffusion(const std::vector<Record>& data, const TrainConfig& config, std::uint64_t seed,
                                TrainReport* report, const std::vector<Record>* validation) {
  config.validate();
  const int n = common_size(data);
  if (n < 2) throw InputError("diffusion training needs at least two customers per instance");
  std::vector<ConstraintMatrix> truth;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].routes) throw InputError("record " + std::to_string(i) + " has no routes label");
    truth.push_back(from_solution(data[i].instance, *data[i].routes));
  }
  const auto& dc = config.diffusion;
  DiffusionModels m(config, substream_seed(seed, "diffusion/init"));
  nn::Adam gat_opt(m.gat.params, {dc.lr, 0.9, 0.999, 1e-8, dc.weight_decay});
  nn::Adam den_opt(m.denoiser.params, {dc.lr, 0.9, 0.999, 1e-8, dc.weight_decay});
  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = {};

  std::vector<std::size_t> order(data.size());
  for (int epoch = 0; epoch < dc.epochs; ++epoch) {
    Rng rng = substream(seed, "diffusion/epoch/" + std::to_string(epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<int> pick_t(1, dc.T);
    std::uniform_int_distribution<int> pick_variant(0, GeometricTransform::kCount - 1);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(dc.batch)) {
      const auto hi = std::min(order.size(), lo + static_cast<std::size_t>(dc.batch));
      const GraphBatch batch{static_cast<int>(hi - lo), n + 1};
      const EdgeLayout layout(batch.count, n);
      std::vector<const CvrpInstance*> insts;
      std::vector<CvrpInstance> variants;
      variants.reserve(hi - lo);
      std::vector<ConstraintMatrix> targets;
      std::vector<int> ts;
      Matrix xt(layout.edges(), 2);
      for (std::size_t k = lo; k < hi; ++k) {
        const auto idx = order[k];
        if (dc.augment) {
          variants.push_back(geometric_transform(data[idx].instance, GeometricTransform{pick_variant(rng)}));
          insts.push_back(&variants.back());
        } else {
          insts.push_back(&data[idx].instance);
        }
        targets.push_back(truth[idx]);
        ts.push_back(pick_t(rng));
        const auto noisy = sample_xt(truth[idx], ts.back(), m.schedule, rng(), dc.symmetric);
        xt.middleRows(static_cast<Eigen::Index>(k - lo) * n * n, static_cast<Eigen::Index>(n) * n) = noisy.one_hot();
      }
      nn::Tape tape;
      nn::GradBuffer gg(m.gat.params), gd(m.denoiser.params);
      nn::BnRecorder rg, rd;
      nn::Binder bg(tape, m.gat.params, &gg, true, &rg);
      nn::Binder bd(tape, m.denoiser.params, &gd, true, &rd);
      Var h = gat_forward(bg, tape.constant(stacked_features(insts)), batch, m.gat);
      Var logits = denoiser_logits(bd, nn::gather_rows(h, customer_rows(batch)), xt, ts, layout, m.denoiser);
      Var loss = denoiser_loss(logits, targets, layout);
      if (!std::isfinite(loss.scalar()))
        throw ModelError("non-finite diffusion loss at step " + std::to_string(rep.steps));
      tape.backward(loss);
      gat_opt.step(m.gat.params, gg);
      den_opt.step(m.denoiser.params, gd);
      rg.commit(m.gat.params);
      rd.commit(m.denoiser.params);
      loss_sum += loss.scalar();
      ++batches;
      ++rep.steps;
    }
    rep.loss_curve.push_back(loss_sum / batches);
    ++rep.epochs_run;
  }

  if (validation && !validation->empty()) {
    const auto insts = pointers(*validation);
    const auto preds = predict_masks(insts, m, dc.inference_steps, seeds_for(seed, "diffusion/validation/", insts.size()));
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < insts.size(); ++i) {
      if (!(*validation)[i].routes) continue;
      if (auto a = auc_score(preds[i].probabilities, from_solution(*insts[i], *(*validation)[i].routes))) {
        sum += *a;
        ++count;
      }
    }
    if (count) rep.validation_auc = sum / count;
  }
  return m;
}

ReinforceStats reinforce_surrogate(const std::vector<const CvrpInstance*>& batch,
                                   const std::vector<ConstraintMatrix>& masks, const GatParams& gat,
                                   const PolicyModels& policy, std::uint64_t seed, int starts_limit,
                                   nn::GradBuffer* encoder_grads, nn::GradBuffer* decoder_grads, bool training,
                                   nn::BnRecorder* recorder, const std::vector<std::vector<int>>* forced) {
  if (batch.empty()) throw InputError("empty REINFORCE batch");
  const int nodes = batch.front()->size() + 1;
  const GraphBatch gb{static_cast<int>(batch.size()), nodes};
  nn::Tape tape;
  nn::Binder be(tape, policy.encoder.params, encoder_grads, training, recorder);
  const auto enc = encode(be, stacked_features(batch), masks, gb, gat, policy.encoder);

  ReinforceStats stats;
  std::vector<RolloutJob> jobs;
  for (std::size_t g = 0; g < batch.size(); ++g) {
    const auto starts = n_start(*batch[g], starts_limit);
    if (starts.empty()) throw InputError("instance without start nodes");
    for (int s : starts) {
      jobs.push_back({static_cast<int>(g), s,
                      substream_seed(seed, "rollout/" + std::to_string(g) + "/" + std::to_string(s)), nullptr});
      stats.graph.push_back(static_cast<int>(g));
      stats.start.push_back(s);
    }
  }
  if (forced) {
    if (forced->size() != jobs.size()) throw ModelError("one forced action list per rollout is required");
    for (std::size_t k = 0; k < jobs.size(); ++k) jobs[k].forced = &(*forced)[k];
  }
  nn::Binder bd(tape, policy.decoder.params, decoder_grads, training);
  auto rolled = rollout_batch(bd, batch, masks, enc, jobs, DecodeMode::sample, policy.decoder);

  const auto rows = jobs.size();
  std::vector<double> sum(batch.size(), 0.0), count(batch.size(), 0.0);
  for (std::size_t k = 0; k < rows; ++k) {
    const auto g = static_cast<std::size_t>(jobs[k].graph);
    stats.rewards.push_back(-tour_length(*batch[g], rolled.results[k].solution));
    sum[g] += stats.rewards.back();
    count[g] += 1.0;
  }
  Matrix adv(static_cast<Eigen::Index>(rows), 1);
  for (std::size_t k = 0; k < rows; ++k) {
    const auto g = static_cast<std::size_t>(jobs[k].graph);
    stats.advantages.push_back(stats.rewards[k] - sum[g] / count[g]);
    adv(static_cast<Eigen::Index>(k), 0) = stats.advantages.back();
  }
  Var loss = nn::scale(nn::sum(nn::mul(rolled.log_prob, tape.constant(adv))), -1.0 / static_cast<double>(rows));
  stats.loss = loss.scalar();
  stats.mean_reward = std::accumulate(stats.rewards.begin(), stats.rewards.end(), 0.0) / static_cast<double>(rows);
  stats.rollouts = std::move(rolled.results);
  if (!std::isfinite(stats.loss)) throw ModelError("non-finite policy loss");
  if (encoder_grads || decoder_grads) tape.backward(loss);
  return stats;
}

PolicyOptimizer::PolicyOptimizer(const PolicyModels& policy, const PolicyTrainConfig& config)
    : encoder(policy.encoder.params, {config.lr, 0.9, 0.999, 1e-8, config.weight_decay}),
      decoder(policy.decoder.params, {config.lr, 0.9, 0.999, 1e-8, config.weight_decay}) {}

ReinforceStats reinforce_step(const std::vector<const CvrpInstance*>& batch, const std::vector<ConstraintMatrix>& masks,
                              const GatParams& gat, PolicyModels& policy, PolicyOptimizer& optimizer,
                              std::uint64_t seed, int starts_limit) {
  nn::GradBuffer ge(policy.encoder.params), gd(policy.decoder.params);
  nn::BnRecorder recorder;
  auto stats = reinforce_surrogate(batch, masks, gat, policy, seed, starts_limit, &ge, &gd, true, &recorder);
  optimizer.encoder.step(policy.encoder.params, ge);
  optimizer.decoder.step(policy.decoder.params, gd);
  recorder.commit(policy.encoder.params);
  return stats;
}

double greedy_objective(const std::vector<const CvrpInstance*>& instances, const std::vector<ConstraintMatrix>& masks,
                        const GatParams& gat, const PolicyModels& policy, int starts_limit) {
  if (instances.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = *instances[i];
    nn::Tape tape;
    nn::Binder be(tape, policy.encoder.params);
    const auto enc = encode(be, node_features(inst), {masks[i]}, {1, inst.size() + 1}, gat, policy.encoder);
    std::vector<RolloutJob> jobs;
    for (int s : n_start(inst, starts_limit)) jobs.push_back({0, s, 0, nullptr});
    nn::Binder bd(tape, policy.decoder.params);
    const auto rolled = rollout_batch(bd, {&inst}, {masks[i]}, enc, jobs, DecodeMode::greedy, policy.decoder);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rolled.results) best = std::min(best, tour_length(inst, r.solution));
    total += best;
  }
  return total / static_cast<double>(instances.size());
}

PolicyModels train_policy(const std::vector<Record>& data, const DiffusionModels& diffusion, const TrainConfig& config,
                          std::uint64_t seed, TrainReport* report, const std::vector<Record>* validation) {
  config.validate();
  common_size(data);
  const auto& pc = config.policy;
  PolicyModels policy(config.model, substream_seed(seed, "policy/init"));
  PolicyOptimizer optimizer(policy, pc);
  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = {};

  const auto train = pointers(data);
  std::vector<const CvrpInstance*> val;
  std::vector<ConstraintMatrix> val_masks;
  if (validation && !validation->empty()) {
    common_size(*validation);
    val = pointers(*validation);
    for (auto& p : predict_masks(val, diffusion, pc.mask_steps, seeds_for(seed, "policy/validation/", val.size())))
      val_masks.push_back(std::move(p.mask));
  }
  PolicyModels best = policy;
  double best_obj = 0.0;
  if (!val.empty()) {
    best_obj = greedy_objective(val, val_masks, diffusion.gat, policy, pc.starts_limit);
    rep.validation_before = best_obj;
  }

  int since_best = 0;
  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < pc.epochs; ++epoch) {
    const auto tag = std::to_string(epoch);
    const auto preds =
        predict_masks(train, diffusion, pc.mask_steps, seeds_for(seed, "policy/masks/" + tag + "/", train.size()));
    Rng rng = substream(seed, "policy/epoch/" + tag);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0, reward_sum = 0.0;
    int batches = 0;
    bool capped = false;
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(pc.batch)) {
      const auto hi = std::min(order.size(), lo + static_cast<std::size_t>(pc.batch));
      std::vector<const CvrpInstance*> insts;
      std::vector<ConstraintMatrix> masks;
      for (std::size_t k = lo; k < hi; ++k) {
        insts.push_back(train[order[k]]);
        masks.push_back(preds[order[k]].mask);
      }
      ReinforceStats stats;
      try {
        stats = reinforce_step(insts, masks, diffusion.gat, policy, optimizer,
                               substream_seed(seed, "policy/step/" + std::to_string(rep.steps)), pc.starts_limit);
      } catch (const ModelError& e) {
        throw ModelError(std::string(e.what()) + " at step " + std::to_string(rep.steps));
      }
      loss_sum += stats.loss;
      reward_sum += stats.mean_reward;
      ++batches;
      ++rep.steps;
      if (pc.max_steps > 0 && rep.steps >= pc.max_steps) {
        capped = true;
        break;
      }
    }
    rep.loss_curve.push_back(loss_sum / batches);
    rep.reward_curve.push_back(reward_sum / batches);
    ++rep.epochs_run;
    if (!val.empty()) {
      const double obj = greedy_objective(val, val_masks, diffusion.gat, policy, pc.starts_limit);
      rep.validation_curve.push_back(obj);
      if (obj < best_obj) {
        best_obj = obj;
        best = policy;
        since_best = 0;
      } else if (++since_best >= pc.patience) {
        rep.early_stop_epoch = epoch;
        break;
      }
    }
    if (capped) break;
  }
  if (val.empty()) return policy;
  rep.validation_after = best_obj;
  return best;
}

}  // namespace cvrpdiff
