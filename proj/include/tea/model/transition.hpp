// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tea/autodiff/gru.hpp"
#include "tea/autodiff/ops.hpp"
#include "tea/data/dataset.hpp"
#include "tea/model/tea_model.hpp"

// Building blocks of the transition score g(v_i -> v_j | history, walks).
namespace tea::model {

/// Tape handles for the transition path. Weight matrices are bound
/// pre-transposed so row-major activations multiply on the right.
struct TransitionWeights {
  ad::Var users, items, positions;
  ad::Var w_q_t, w_k_t, w_v_t;
  ad::Var w1_t, b1, w2_t, b2;
  ad::Var w3_t;
  std::optional<ad::GruWeights> walk_gru;
  std::size_t dim = 0;

  static TransitionWeights bind(ad::Tape& tape, const TeaModel& model);
};

/// Scaled dot-product attention weights, one row per query.
/// history: [H x d], rows q_tau + k_tau. queries: [C x d], rows q_j + k_j.
/// Query c attends to history rows tau < lengths[c]; each length must be in [1, H].
/// Result: [C x H] with exact zeros beyond each row's length.
ad::Var causal_attention_weights(ad::Var history, ad::Var queries, const std::vector<std::size_t>& lengths,
                                 ad::Var w_q_t, ad::Var w_k_t);

/// z = weights * (history W_V^T). weights [C x H] -> [C x d].
ad::Var aggregate_history(ad::Var weights, ad::Var history, ad::Var w_v_t);

struct WalkSummary {
  ad::Var user_state;   // h_u
  ad::Var item_state;   // h_v
  std::vector<ad::Var> partner_states;  // h_u' per walk, only when requested
};

/// Runs the walk GRU over (p_i, q_t, p_partner) for every walk from a zero
/// state and mean-pools each position's output. The first two inputs are the
/// same for every walk of one anchor, so their states are shared exactly.
/// An empty walk set yields zero vectors.
WalkSummary walk_aggregate(const data::WalkSet& walks, ad::Var user_vec, ad::Var item_vec, ad::Var user_table,
                           const ad::GruWeights& gru, bool keep_partner_states = false);

/// h^v = p_i + W2 relu(W1 z + b1) + b2, optionally dropped out, then
/// g = (W3 [h^v ; walk ; p_i])^T q_j row-wise.
/// z: [C x d], walk_rows: [C x 2d], candidates: [C x d]. Returns {g [C], h^v [C x d]}.
struct TransitionHead {
  ad::Var scores;
  ad::Var item_head;
};
TransitionHead transition_head(const TransitionWeights& w, ad::Var z, ad::Var user_vec, ad::Var walk_rows,
                               ad::Var candidates, double dropout, Rng* rng);

}  // namespace tea::model
