// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tea/autodiff/ops.hpp"
#include "tea/autodiff/parameters.hpp"
#include "tea/data/interactions.hpp"

// Negative-sampling pseudo-likelihood loss and the exact per-step softmax it
// approximates. Losses are written as quantities to minimize.
namespace tea::objective {

struct ScoredStep {
  double positive = 0.0;          // f + g of the target
  std::vector<double> negatives;  // f + g of each sampled negative
  data::UserId user = 0;
  std::size_t step = 0;
};

/// -(1/N) sum_steps [log sigma(pos) + sum_k log sigma(-neg_k)], N = steps.
/// Throws InvalidArgument for an empty batch or a step without exactly
/// `n_negatives` negatives.
double sequence_loss(const std::vector<ScoredStep>& batch, std::size_t n_negatives);

/// Tape form for one episode: `scores` holds each step's positive followed by
/// its negatives, step k spanning [offsets[k], offsets[k+1]). Returns the
/// *sum* of per-step terms; the caller divides by the batch step count.
ad::Var episode_loss_sum(ad::Var scores, const std::vector<std::size_t>& offsets);

/// Sum of squared entries over every tensor in the store.
double squared_norm(const ad::ParameterStore& params);

/// crf + gamma * sum ||theta||^2. Each stored tensor is counted once.
double total_loss(double crf, const ad::ParameterStore& params, double gamma);
/// Tape form; parameter gradients flow into the GradientMap given to backward().
ad::Var total_loss(ad::Var crf, const ad::ParameterStore& params, double gamma);

/// Softmax of f + g over the whole catalogue (max-subtracted).
std::vector<double> exact_conditional(std::span<const double> scores);

/// sigma(f + g).
double predict_probability(double f, double g);

}  // namespace tea::objective
