// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tea/autodiff/gru.hpp"
#include "tea/autodiff/ops.hpp"
#include "tea/data/interactions.hpp"
#include "tea/model/tea_model.hpp"

// Building blocks of the unary score f(v_j | user, buckets, neighbors).
namespace tea::model {

struct UnaryWeights {
  ad::Var users, items;
  ad::Var w_a, w_a_t;
  std::optional<ad::Var> att;
  ad::Var w_s_t;
  ad::GruWeights gru;
  ad::Var w1_t, b1, w2_t, b2;
  std::size_t dim = 0;

  static UnaryWeights bind(ad::Tape& tape, const TeaModel& model);
};

/// Mean-pool aggregation for several buckets at once: row s is
/// relu(W_A mean(q over buckets[s])), zero input for an empty bucket.
ad::Var bipartite_sage(const UnaryWeights& w, const std::vector<std::vector<data::ItemId>>& buckets);

/// Attention aggregation of one bucket around the anchor item v_t:
/// alpha = softmax(leaky_relu(a^T [W_A q_t ; W_A q_j])), result relu(sum alpha_j q_j).
/// An empty bucket gives the zero vector. Requires the attention vector.
ad::Var bipartite_attention(const UnaryWeights& w, data::ItemId anchor, const std::vector<data::ItemId>& bucket);

/// Folds the temporal GRU over `inputs` from a zero state. Returns
/// inputs.size() + 1 states; states[0] is the zero state.
std::vector<ad::Var> temporal_recurrence(const UnaryWeights& w, const std::vector<ad::Var>& inputs);

/// relu(W_S mean(p over neighbors)); zero vector without neighbors.
ad::Var social_aggregate(const UnaryWeights& w, const std::vector<data::UserId>& neighbors);

/// h^u = W2 relu(W1 [h_t ; h_s] + b1) + b2 for each row of `temporal` [S x d],
/// optionally dropped out. Returns [S x d].
ad::Var unary_head(const UnaryWeights& w, ad::Var temporal, ad::Var social, double dropout, Rng* rng);

}  // namespace tea::model
