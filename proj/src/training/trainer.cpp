// SPDX-License-Identifier: Apache-2.0
#include "tea/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <sstream>
#include <tuple>

#include "tea/error.hpp"
#include "tea/eval/evaluation.hpp"
#include "tea/model/episode.hpp"
#include "tea/objective/objective.hpp"

namespace tea::training {

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw InvalidArgument(std::string("train: ") + name + " must be positive");
  };
  positive(dim, "dim");
  positive(batch_size, "batch_size");
  positive(n_negatives, "n_negatives");
  positive(patience, "patience");
  positive(eval_negatives, "eval_negatives");
  positive(shards, "shards");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("train: dropout must lie in [0, 1)");
  if (!(gamma >= 0.0)) throw InvalidArgument("train: gamma must be non-negative");
  if (!(learning_rate > 0.0)) throw InvalidArgument("train: learning rate must be positive");
}

StopDecision early_stop(const std::vector<double>& history, std::size_t patience) {
  if (history.empty()) return {};
  const auto best = static_cast<std::size_t>(std::max_element(history.begin(), history.end()) - history.begin());
  return {history.size() - (best + 1) >= patience, best + 1};
}

model::ModelConfig model_config(const data::PreparedDataset& ds, const TrainConfig& config) {
  return {config.dim, ds.n_users, ds.n_items, ds.options.seq_len, config.variant};
}

std::vector<TrainingUnit> training_units(const data::PreparedDataset& ds, bool all_steps) {
  std::vector<TrainingUnit> units;
  for (std::size_t u = 0; u < ds.n_users; ++u) {
    const std::size_t t = ds.users[u].sequence.size();
    if (t < 2) continue;
    for (std::size_t s = all_steps ? 1 : t - 1; s < t; ++s) units.push_back({static_cast<data::UserId>(u), s});
  }
  return units;
}

namespace {

struct UserGroup {
  data::UserId user;
  std::vector<std::size_t> steps;
};

std::vector<UserGroup> group_by_user(std::vector<TrainingUnit> units) {
  std::sort(units.begin(), units.end(),
            [](const TrainingUnit& a, const TrainingUnit& b) { return std::tie(a.user, a.step) < std::tie(b.user, b.step); });
  std::vector<UserGroup> groups;
  for (const auto& u : units) {
    if (groups.empty() || groups.back().user != u.user) groups.push_back({u.user, {}});
    groups.back().steps.push_back(u.step);
  }
  return groups;
}

/// Forward + backward for one user's steps; returns the summed (unnormalized) loss.
double accumulate_group(const model::TeaModel& m, const data::PreparedDataset& ds, const UserGroup& g,
                        const BatchSpec& batch, const TrainConfig& config, double inv_steps, ad::GradientMap& grads) {
  auto ep = model::training_episode(ds, g.user, g.steps);
  for (auto& step : ep.steps) {
    Rng neg = derive_rng(config.seed, {kStreamNegatives, g.user, step.context, batch.epoch});
    const auto n = data::sample_negatives(step.candidates[0], ds.n_items, config.n_negatives, neg);
    step.candidates.insert(step.candidates.end(), n.begin(), n.end());
  }
  Rng drop = derive_rng(config.seed, {kStreamDropout, g.user, batch.epoch, batch.index});
  ad::Tape tape;
  const auto out = model::score_episode(tape, m, ep, {config.dropout, &drop});
  ad::Var loss = objective::episode_loss_sum(out.total, out.offsets);
  tape.backward(ad::scale(loss, inv_steps), &grads);
  return loss.value().item();
}

}  // namespace

BatchGradient batch_gradient(const model::TeaModel& m, const data::PreparedDataset& ds, const BatchSpec& batch,
                             const TrainConfig& config, ad::GradientMap& grads) {
  if (batch.units.empty()) return {};
  const double inv = 1.0 / static_cast<double>(batch.units.size());
  const auto groups = group_by_user(batch.units);
  const std::size_t shards = std::min(config.shards, groups.size());
  std::vector<ad::GradientMap> shard_grads(shards, ad::GradientMap(m.parameters()));
  std::vector<double> shard_loss(shards, 0.0);
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1) if (config.parallel)
  for (std::size_t s = 0; s < shards; ++s) {
    try {
      const std::size_t lo = groups.size() * s / shards;
      const std::size_t hi = groups.size() * (s + 1) / shards;
      for (std::size_t i = lo; i < hi; ++i)
        shard_loss[s] += accumulate_group(m, ds, groups[i], batch, config, inv, shard_grads[s]);
    } catch (...) {
#pragma omp critical(tea_train_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  double loss = 0.0;
  for (std::size_t s = 0; s < shards; ++s) {
    grads.add(shard_grads[s]);
    loss += shard_loss[s];
  }
  return {loss * inv, batch.units.size()};
}

BatchGradient batch_gradient_serial(const model::TeaModel& m, const data::PreparedDataset& ds,
                                    const BatchSpec& batch, const TrainConfig& config, ad::GradientMap& grads) {
  if (batch.units.empty()) return {};
  const double inv = 1.0 / static_cast<double>(batch.units.size());
  double loss = 0.0;
  for (const auto& g : group_by_user(batch.units)) loss += accumulate_group(m, ds, g, batch, config, inv, grads);
  return {loss * inv, batch.units.size()};
}

double clip_global_norm(ad::GradientMap& grads, double max_norm) {
  const double norm = grads.global_norm();
  if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

double crf_user_scale(const std::vector<TrainingUnit>& units) {
  if (units.empty()) return 1.0;
  std::size_t users = 1;
  for (std::size_t i = 1; i < units.size(); ++i) users += units[i].user != units[i - 1].user;
  return static_cast<double>(units.size()) / static_cast<double>(users);
}

namespace {

[[noreturn]] void numerical_failure(const std::string& what, std::size_t epoch, std::size_t batch,
                                    const ad::ParameterStore& params, const ad::GradientMap* grads) {
  std::ostringstream msg;
  msg << "non-finite " << what << " at epoch " << epoch << ", batch " << batch;
  auto offending = [&]() -> std::optional<ad::ParamId> {
    for (std::size_t i = 0; i < params.size(); ++i)
      if (!params.value(ad::ParamId{i}).all_finite()) return ad::ParamId{i};
    if (grads != nullptr)
      for (std::size_t i = 0; i < params.size(); ++i)
        if (!(*grads)[ad::ParamId{i}].all_finite()) return ad::ParamId{i};
    return std::nullopt;
  }();
  if (offending) {
    msg << "; parameter '" << params.name(*offending) << "' norm " << std::sqrt(params.value(*offending).squared_norm());
    if (grads != nullptr) msg << ", gradient norm " << std::sqrt((*grads)[*offending].squared_norm());
  }
  throw NumericalError(msg.str());
}

}  // namespace

StepResult optimizer_step(model::TeaModel& m, const data::PreparedDataset& ds, const BatchSpec& spec,
                          const TrainConfig& config, double kappa, ad::Adam& adam, ad::GradientMap& grads) {
  grads.zero();
  const BatchGradient bg = batch_gradient(m, ds, spec, config, grads);
  if (!std::isfinite(bg.loss)) numerical_failure("loss", spec.epoch, spec.index, m.parameters(), &grads);

  grads.scale(kappa);
  ad::Tape reg;
  ad::Var total = objective::total_loss(reg.constant(ad::Tensor::scalar(kappa * bg.loss)), m.parameters(), config.gamma);
  reg.backward(total, &grads);
  const double total_value = total.value().item();
  if (!std::isfinite(total_value) || !grads.all_finite()) {
    numerical_failure(std::isfinite(total_value) ? "gradient" : "loss", spec.epoch, spec.index, m.parameters(), &grads);
  }
  clip_global_norm(grads, config.clip_norm);
  adam.step(m.parameters(), grads);
  if (!m.parameters().all_finite()) numerical_failure("parameter", spec.epoch, spec.index, m.parameters(), nullptr);
  return {bg.loss, total_value, bg.steps};
}

TrainResult train(const data::PreparedDataset& ds, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (ds.n_users == 0 || ds.n_items < 2) throw EmptyData("train: dataset has no users or fewer than 2 items");
  const auto mc = model_config(ds, config);
  model::TeaModel m = model::TeaModel::create(mc, config.seed);
  TrainResult result{m, {}, 0, false};
  if (config.max_epochs == 0) return result;

  std::vector<TrainingUnit> order = training_units(ds, config.all_steps);
  if (order.empty()) throw EmptyData("train: no user has two or more training interactions");
  const double kappa = crf_user_scale(order);

  ad::Adam adam(m.parameters(), {config.learning_rate, 0.9, 0.999, 1e-8});
  ad::GradientMap grads(m.parameters());
  ad::ParameterStore best = m.parameters();
  std::vector<double> val_history;

  eval::EvalConfig vcfg;
  vcfg.holdout = model::Holdout::kValidation;
  vcfg.ks = {10};
  vcfg.n_negatives = config.eval_negatives;
  vcfg.seed = config.seed;
  vcfg.parallel = config.parallel;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng = derive_rng(config.seed, {kStreamShuffle, epoch});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t step_sum = 0;
    std::size_t batch_index = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size, ++batch_index) {
      const std::size_t hi = std::min(order.size(), lo + config.batch_size);
      BatchSpec spec{{order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi)},
                     epoch, batch_index + 1};
      const StepResult bg = optimizer_step(m, ds, spec, config, kappa, adam, grads);
      loss_sum += bg.loss * static_cast<double>(bg.steps);
      step_sum += bg.steps;
    }

    const auto report = eval::evaluate_all(m, ds, vcfg);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(step_sum), report.hr_at(10), report.ndcg_at(10)};
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);

    val_history.push_back(rec.val_ndcg10);
    const StopDecision d = early_stop(val_history, config.patience);
    if (d.best_epoch == epoch) best = m.parameters();
    result.best_epoch = d.best_epoch;
    if (d.stop && epoch < config.max_epochs) {
      result.stopped_early = true;
      break;
    }
  }
  result.model = model::TeaModel::from_parameters(mc, std::move(best));
  return result;
}

}  // namespace tea::training
