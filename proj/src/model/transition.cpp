// SPDX-License-Identifier: Apache-2.0
#include "tea/model/transition.hpp"

#include <cmath>

#include "tea/error.hpp"

namespace tea::model {

using ad::Var;

TransitionWeights TransitionWeights::bind(ad::Tape& tape, const TeaModel& model) {
  const auto& s = model.parameters();
  const auto& e = model.embeddings();
  const auto& t = model.transition();
  TransitionWeights w;
  w.users = tape.parameter(s, e.users);
  w.items = tape.parameter(s, e.items);
  w.positions = tape.parameter(s, e.positions);
  w.w_q_t = ad::transpose(tape.parameter(s, t.w_q));
  w.w_k_t = ad::transpose(tape.parameter(s, t.w_k));
  w.w_v_t = ad::transpose(tape.parameter(s, t.w_v));
  w.w1_t = ad::transpose(tape.parameter(s, t.w1));
  w.b1 = tape.parameter(s, t.b1);
  w.w2_t = ad::transpose(tape.parameter(s, t.w2));
  w.b2 = tape.parameter(s, t.b2);
  w.w3_t = ad::transpose(tape.parameter(s, t.w3));
  if (t.walk_gru) w.walk_gru = ad::GruWeights::bind(tape, s, *t.walk_gru);
  w.dim = model.config().dim;
  return w;
}

Var causal_attention_weights(Var history, Var queries, const std::vector<std::size_t>& lengths, Var w_q_t,
                             Var w_k_t) {
  if (history.shape().size() != 2 || queries.shape().size() != 2) {
    throw ShapeError("causal_attention_weights: history and queries must be matrices, got " +
                     ad::shape_string(history.shape()) + " and " + ad::shape_string(queries.shape()));
  }
  const std::size_t h = history.shape()[0];
  const std::size_t c = queries.shape()[0];
  if (lengths.size() != c) throw ShapeError("causal_attention_weights: one length per query row required");
  std::vector<std::uint8_t> mask(c * h, 0);
  for (std::size_t r = 0; r < c; ++r) {
    if (lengths[r] == 0 || lengths[r] > h) {
      throw InvalidArgument("causal_attention_weights: length " + std::to_string(lengths[r]) +
                            " outside [1, " + std::to_string(h) + "]");
    }
    std::fill(mask.begin() + static_cast<std::ptrdiff_t>(r * h),
              mask.begin() + static_cast<std::ptrdiff_t>(r * h + lengths[r]), 1);
  }
  const double d = static_cast<double>(queries.shape()[1]);
  Var q = ad::matmul(queries, w_q_t);
  Var k = ad::matmul(history, w_k_t);
  Var logits = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(d));
  return ad::masked_softmax(logits, std::move(mask));
}

Var aggregate_history(Var weights, Var history, Var w_v_t) {
  return ad::matmul(weights, ad::matmul(history, w_v_t));
}

WalkSummary walk_aggregate(const data::WalkSet& walks, Var user_vec, Var item_vec, Var user_table,
                           const ad::GruWeights& gru, bool keep_partner_states) {
  ad::Tape& tape = user_vec.tape();
  WalkSummary out;
  if (walks.empty()) {
    out.user_state = tape.constant(ad::Tensor({gru.dim}, 0.0));
    out.item_state = tape.constant(ad::Tensor({gru.dim}, 0.0));
    return out;
  }
  Var h0 = tape.constant(ad::Tensor({gru.dim}, 0.0));
  out.user_state = ad::gru_cell(user_vec, h0, gru);
  out.item_state = ad::gru_cell(item_vec, out.user_state, gru);
  if (keep_partner_states) {
    for (const auto& walk : walks) {
      out.partner_states.push_back(ad::gru_cell(ad::take_row(user_table, walk.partner), out.item_state, gru));
    }
  }
  return out;
}

TransitionHead transition_head(const TransitionWeights& w, Var z, Var user_vec, Var walk_rows, Var candidates,
                               double dropout, Rng* rng) {
  const std::size_t c = z.shape()[0];
  Var hidden = ad::relu(ad::add(ad::matmul(z, w.w1_t), w.b1));
  Var hv = ad::add(ad::add(ad::matmul(hidden, w.w2_t), w.b2), user_vec);
  if (dropout > 0.0 && rng != nullptr) hv = ad::dropout(hv, dropout, *rng);
  Var x = ad::concat({hv, walk_rows, ad::tile_rows(user_vec, c)});
  Var y = ad::matmul(x, w.w3_t);
  return {ad::dot(y, candidates), hv};
}

}  // namespace tea::model
