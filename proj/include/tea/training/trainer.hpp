// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "tea/autodiff/adam.hpp"
#include "tea/autodiff/parameters.hpp"
#include "tea/data/dataset.hpp"
#include "tea/model/tea_model.hpp"

namespace tea::training {

struct TrainConfig {
  std::size_t dim = 64;
  std::size_t batch_size = 1024;  // training units (user, step) per batch
  double dropout = 0.5;
  double gamma = 5e-4;
  std::size_t n_negatives = 50;
  double learning_rate = 0.01;
  std::size_t max_epochs = 50;
  std::size_t patience = 10;
  std::uint64_t seed = 42;
  model::Variant variant = model::Variant::kTeaS;
  bool all_steps = true;          // every t < T is a target, not only the last
  double clip_norm = 5.0;         // <= 0 disables clipping
  std::size_t eval_negatives = 100;
  std::size_t shards = 4;         // fixed gradient partition, independent of thread count
  bool parallel = true;

  /// Throws InvalidArgument on a non-positive size or a probability outside [0, 1).
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean crf loss per training step over the epoch
  double val_hr10 = 0.0;
  double val_ndcg10 = 0.0;
};

struct StopDecision {
  bool stop = false;
  std::size_t best_epoch = 0;  // 1-based; 0 for an empty history
};

/// Stop once the best value (earliest on ties) is `patience` or more epochs old.
StopDecision early_stop(const std::vector<double>& history, std::size_t patience);

struct TrainResult {
  model::TeaModel model;  // best-validation parameters
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

/// One training target: predict sequence[step] of `user` from the items before it.
struct TrainingUnit {
  data::UserId user = 0;
  std::size_t step = 0;
  friend bool operator==(const TrainingUnit&, const TrainingUnit&) = default;
};

/// Every target of the dataset: steps 1..T-1 of each user, or only T-1
/// when `all_steps` is false.
std::vector<TrainingUnit> training_units(const data::PreparedDataset& ds, bool all_steps);

struct BatchSpec {
  std::vector<TrainingUnit> units;
  std::size_t epoch = 1;
  std::size_t index = 0;  // batch number within the epoch
};

struct BatchGradient {
  double loss = 0.0;  // mean crf loss over the batch units
  std::size_t steps = 0;
};

/// Mean crf loss of a batch and its gradient, accumulated into `grads`.
/// Units of the same user share one forward pass. Negatives for (user, step)
/// and dropout masks for (user, batch) come from streams derived from the
/// seed, so the grouping and the thread count do not change the result. User
/// groups are split into `config.shards` contiguous shards that run
/// concurrently and are summed in shard order.
BatchGradient batch_gradient(const model::TeaModel& model, const data::PreparedDataset& ds, const BatchSpec& batch,
                             const TrainConfig& config, ad::GradientMap& grads);
/// Single-threaded reference accumulating straight into `grads`, one user at a time.
BatchGradient batch_gradient_serial(const model::TeaModel& model, const data::PreparedDataset& ds,
                                    const BatchSpec& batch, const TrainConfig& config, ad::GradientMap& grads);

/// Average number of units per user, for units grouped by user (as
/// training_units returns them). The crf term is averaged over users and
/// summed over their steps, so a per-step batch mean is scaled by this factor
/// before the L2 term is added.
double crf_user_scale(const std::vector<TrainingUnit>& units);

/// Rescales grads to `max_norm` if their global norm exceeds it; returns the norm before clipping.
double clip_global_norm(ad::GradientMap& grads, double max_norm);

struct StepResult {
  double loss = 0.0;   // mean crf loss over the batch units, before the update
  double total = 0.0;  // user-scaled crf loss + gamma * ||theta||^2, before the update
  std::size_t steps = 0;
};

/// One Adam update on `batch`: gradient of kappa * batch crf mean + L2, global
/// norm clipping, then the step. Throws NumericalError on a non-finite loss,
/// gradient or updated parameter.
StepResult optimizer_step(model::TeaModel& model, const data::PreparedDataset& ds, const BatchSpec& batch,
                          const TrainConfig& config, double kappa, ad::Adam& adam, ad::GradientMap& grads);

/// Called after every epoch; used by the CLI for progress logging.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on the user-averaged crf loss + gamma * ||theta||^2 with per-epoch
/// validation and early stopping on NDCG@10. Throws NumericalError (with
/// epoch, batch and the offending parameter) on a non-finite loss or gradient.
TrainResult train(const data::PreparedDataset& ds, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Model configuration implied by a dataset and a training config.
model::ModelConfig model_config(const data::PreparedDataset& ds, const TrainConfig& config);

}  // namespace tea::training
