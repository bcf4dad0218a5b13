// SPDX-License-Identifier: Apache-2.0
#include "tea/model/unary.hpp"

#include "tea/error.hpp"

namespace tea::model {

using ad::Var;

UnaryWeights UnaryWeights::bind(ad::Tape& tape, const TeaModel& model) {
  const auto& s = model.parameters();
  const auto& e = model.embeddings();
  const auto& u = model.unary();
  UnaryWeights w;
  w.users = tape.parameter(s, e.users);
  w.items = tape.parameter(s, e.items);
  w.w_a = tape.parameter(s, u.w_a);
  w.w_a_t = ad::transpose(w.w_a);
  if (u.att) w.att = tape.parameter(s, *u.att);
  w.w_s_t = ad::transpose(tape.parameter(s, u.w_s));
  w.gru = ad::GruWeights::bind(tape, s, u.temporal_gru);
  w.w1_t = ad::transpose(tape.parameter(s, u.w1));
  w.b1 = tape.parameter(s, u.b1);
  w.w2_t = ad::transpose(tape.parameter(s, u.w2));
  w.b2 = tape.parameter(s, u.b2);
  w.dim = model.config().dim;
  return w;
}

Var bipartite_sage(const UnaryWeights& w, const std::vector<std::vector<data::ItemId>>& buckets) {
  std::vector<std::vector<std::size_t>> groups(buckets.size());
  for (std::size_t s = 0; s < buckets.size(); ++s) groups[s].assign(buckets[s].begin(), buckets[s].end());
  return ad::relu(ad::matmul(ad::segment_mean(w.items, std::move(groups)), w.w_a_t));
}

Var bipartite_attention(const UnaryWeights& w, data::ItemId anchor, const std::vector<data::ItemId>& bucket) {
  if (!w.att) throw InvalidArgument("bipartite_attention: model has no attention vector");
  ad::Tape& tape = w.items.tape();
  if (bucket.empty()) return tape.constant(ad::Tensor({w.dim}, 0.0));
  const std::size_t b = bucket.size();
  Var members = ad::gather_rows(w.items, std::vector<std::size_t>(bucket.begin(), bucket.end()));
  Var projected = ad::matmul(members, w.w_a_t);
  Var anchor_proj = ad::matmul(w.w_a, ad::take_row(w.items, anchor));
  Var pairs = ad::concat({ad::tile_rows(anchor_proj, b), projected});
  Var logits = ad::leaky_relu(ad::matmul(pairs, *w.att));
  Var alpha = ad::masked_softmax(logits, std::vector<std::uint8_t>(b, 1));
  return ad::relu(ad::matmul(alpha, members));
}

std::vector<Var> temporal_recurrence(const UnaryWeights& w, const std::vector<Var>& inputs) {
  std::vector<Var> states;
  states.reserve(inputs.size() + 1);
  states.push_back(w.items.tape().constant(ad::Tensor({w.dim}, 0.0)));
  for (const auto& x : inputs) states.push_back(ad::gru_cell(x, states.back(), w.gru));
  return states;
}

Var social_aggregate(const UnaryWeights& w, const std::vector<data::UserId>& neighbors) {
  if (neighbors.empty()) return w.users.tape().constant(ad::Tensor({w.dim}, 0.0));
  Var pooled = ad::mean_pool(ad::gather_rows(w.users, std::vector<std::size_t>(neighbors.begin(), neighbors.end())));
  return ad::relu(ad::matmul(pooled, w.w_s_t));
}

Var unary_head(const UnaryWeights& w, Var temporal, Var social, double dropout, Rng* rng) {
  const std::size_t s = temporal.shape()[0];
  Var x = ad::concat({temporal, ad::tile_rows(social, s)});
  Var hidden = ad::relu(ad::add(ad::matmul(x, w.w1_t), w.b1));
  Var hu = ad::add(ad::matmul(hidden, w.w2_t), w.b2);
  if (dropout > 0.0 && rng != nullptr) hu = ad::dropout(hu, dropout, *rng);
  return hu;
}

}  // namespace tea::model
