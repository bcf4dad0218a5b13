// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "tea/autodiff/ops.hpp"
#include "tea/data/dataset.hpp"
#include "tea/model/tea_model.hpp"

namespace tea::model {

/// One prediction point: the first `context` history items are known and the
/// candidates compete for history position `context`.
struct Step {
  std::size_t context = 0;
  std::vector<data::ItemId> candidates;
};

/// Everything the model sees for one user. Several steps share a single
/// forward pass over the history.
struct Episode {
  data::UserId user = 0;
  std::vector<data::ItemId> history;                // time order
  std::vector<std::vector<data::ItemId>> buckets;   // buckets[s] lies between history[s] and the next item
  std::vector<data::WalkSet> walks;                 // walks[s] anchored at history[s]
  std::vector<data::UserId> social;
  std::vector<Step> steps;

  std::size_t candidate_count() const;
};

struct ForwardOptions {
  double dropout = 0.0;
  Rng* rng = nullptr;  // dropout masks; no dropout without one
};

struct EpisodeOutput {
  ad::Var unary;       // f, [C] in step order
  ad::Var transition;  // g, [C]
  ad::Var total;       // f + g
  std::vector<std::size_t> offsets;  // step k owns candidates [offsets[k], offsets[k+1])

  // Intermediate activations.
  ad::Var attention_context;  // z, [C x d]
  ad::Var walk_rows;          // [h_u ; h_v] per candidate, [C x 2d]
  ad::Var item_head;          // h^v, [C x d]
  ad::Var user_head;          // h^u, [steps x d]
};

/// Scores every candidate of every step. Throws InvalidArgument for ids out
/// of range or a context the history, buckets or position table cannot cover.
EpisodeOutput score_episode(ad::Tape& tape, const TeaModel& model, const Episode& episode,
                            const ForwardOptions& options = {});

/// Training episode for one user with one step per entry of `targets`:
/// step t predicts sequence[t] from the first t items (each t in [1, T)).
/// Each step holds only the positive; callers append negatives.
Episode training_episode(const data::PreparedDataset& ds, data::UserId user, const std::vector<std::size_t>& targets);

enum class Holdout { kValidation, kTest };

/// Single-step episode scoring `candidates` for the held-out interaction.
/// The history is the training sequence (plus the validation item for the
/// test holdout), trimmed to the most recent seq_len - 1 items.
Episode holdout_episode(const data::PreparedDataset& ds, data::UserId user, Holdout holdout,
                        std::vector<data::ItemId> candidates);

}  // namespace tea::model
