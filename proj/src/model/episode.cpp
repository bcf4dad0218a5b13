// SPDX-License-Identifier: Apache-2.0
#include "tea/model/episode.hpp"

#include <algorithm>
#include <numeric>

#include "tea/error.hpp"
#include "tea/model/transition.hpp"
#include "tea/model/unary.hpp"

namespace tea::model {

using ad::Var;

std::size_t Episode::candidate_count() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.candidates.size();
  return n;
}

namespace {

void validate(const TeaModel& model, const Episode& ep) {
  const auto& c = model.config();
  if (ep.user >= c.n_users) throw InvalidArgument("episode: user id " + std::to_string(ep.user) + " out of range");
  if (ep.steps.empty()) throw InvalidArgument("episode: no steps");
  auto check_item = [&](data::ItemId i) {
    if (i >= c.n_items) throw InvalidArgument("episode: item id " + std::to_string(i) + " out of range");
  };
  for (auto i : ep.history) check_item(i);
  for (const auto& b : ep.buckets)
    for (auto i : b) check_item(i);
  for (auto u : ep.social)
    if (u >= c.n_users) throw InvalidArgument("episode: neighbor id " + std::to_string(u) + " out of range");
  std::size_t max_ctx = 0;
  for (const auto& s : ep.steps) {
    if (s.context > ep.history.size()) throw InvalidArgument("episode: step context exceeds history");
    if (s.context >= c.seq_len) {
      throw InvalidArgument("episode: step context " + std::to_string(s.context) + " needs more than " +
                            std::to_string(c.seq_len) + " positions");
    }
    if (s.candidates.empty()) throw InvalidArgument("episode: step without candidates");
    for (auto i : s.candidates) check_item(i);
    max_ctx = std::max(max_ctx, s.context);
  }
  if (ep.buckets.size() < max_ctx) throw InvalidArgument("episode: fewer buckets than the deepest context");
  if (uses_walks(c.variant) && ep.walks.size() < max_ctx) {
    throw InvalidArgument("episode: fewer walk sets than the deepest context");
  }
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

EpisodeOutput score_episode(ad::Tape& tape, const TeaModel& model, const Episode& ep, const ForwardOptions& opt) {
  validate(model, ep);
  const auto& cfg = model.config();
  const std::size_t d = cfg.dim;
  const std::size_t n_steps = ep.steps.size();
  const TransitionWeights tw = TransitionWeights::bind(tape, model);
  const UnaryWeights uw = UnaryWeights::bind(tape, model);

  EpisodeOutput out;
  out.offsets.push_back(0);
  std::vector<std::size_t> cand_ids, cand_step;
  std::size_t max_ctx = 0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const auto& s = ep.steps[k];
    for (auto i : s.candidates) {
      cand_ids.push_back(i);
      cand_step.push_back(k);
    }
    out.offsets.push_back(cand_ids.size());
    max_ctx = std::max(max_ctx, s.context);
  }
  const std::size_t n_cand = cand_ids.size();

  Var q_cand = ad::gather_rows(tw.items, cand_ids);
  Var p = ad::take_row(tw.users, ep.user);

  // Self-attention over the history for candidates with a non-empty context.
  std::vector<std::size_t> attending, lengths, attend_ids, attend_pos;
  std::vector<std::size_t> z_row(n_cand);
  for (std::size_t c = 0; c < n_cand; ++c) {
    const std::size_t ctx = ep.steps[cand_step[c]].context;
    if (ctx == 0) continue;
    z_row[c] = attending.size();
    attending.push_back(c);
    lengths.push_back(ctx);
    attend_ids.push_back(cand_ids[c]);
    attend_pos.push_back(ctx);
  }
  Var z;
  if (attending.empty()) {
    z = tape.constant(ad::Tensor({n_cand, d}, 0.0));
  } else {
    const std::vector<std::size_t> hist(ep.history.begin(), ep.history.begin() + static_cast<std::ptrdiff_t>(max_ctx));
    Var keys = ad::add(ad::gather_rows(tw.items, hist), ad::gather_rows(tw.positions, iota(max_ctx)));
    Var queries = ad::add(ad::gather_rows(tw.items, attend_ids), ad::gather_rows(tw.positions, attend_pos));
    Var a = causal_attention_weights(keys, queries, lengths, tw.w_q_t, tw.w_k_t);
    Var zs = aggregate_history(a, keys, tw.w_v_t);
    if (attending.size() == n_cand) {
      z = zs;
    } else {
      const std::size_t zero_row = attending.size();
      for (std::size_t c = 0; c < n_cand; ++c)
        if (ep.steps[cand_step[c]].context == 0) z_row[c] = zero_row;
      z = ad::gather_rows(ad::stack_rows({zs, tape.constant(ad::Tensor({1, d}, 0.0))}), z_row);
    }
  }
  out.attention_context = z;

  // Walk summaries, one per step, anchored at the last known item.
  if (tw.walk_gru) {
    std::vector<Var> rows;
    rows.reserve(n_steps);
    for (const auto& s : ep.steps) {
      if (s.context == 0) {
        rows.push_back(tape.constant(ad::Tensor({2 * d}, 0.0)));
        continue;
      }
      const std::size_t anchor = s.context - 1;
      WalkSummary w = walk_aggregate(ep.walks[anchor], p, ad::take_row(tw.items, ep.history[anchor]), tw.users,
                                     *tw.walk_gru);
      rows.push_back(ad::concat({w.user_state, w.item_state}));
    }
    out.walk_rows = ad::gather_rows(ad::stack_rows(rows), cand_step);
  } else {
    out.walk_rows = tape.constant(ad::Tensor({n_cand, 2 * d}, 0.0));
  }

  TransitionHead g = transition_head(tw, z, p, out.walk_rows, q_cand, opt.dropout, opt.rng);
  out.transition = g.scores;
  out.item_head = g.item_head;

  // Unary path: bucket aggregation -> temporal GRU -> head.
  std::vector<Var> inputs;
  inputs.reserve(max_ctx);
  if (max_ctx > 0) {
    if (aggregator_of(cfg.variant) == Aggregator::kSage) {
      std::vector<std::vector<data::ItemId>> buckets(ep.buckets.begin(),
                                                     ep.buckets.begin() + static_cast<std::ptrdiff_t>(max_ctx));
      Var m = bipartite_sage(uw, buckets);
      for (std::size_t s = 0; s < max_ctx; ++s) inputs.push_back(ad::take_row(m, s));
    } else {
      for (std::size_t s = 0; s < max_ctx; ++s) inputs.push_back(bipartite_attention(uw, ep.history[s], ep.buckets[s]));
    }
  }
  const std::vector<Var> states = temporal_recurrence(uw, inputs);
  std::vector<Var> step_states;
  step_states.reserve(n_steps);
  for (const auto& s : ep.steps) step_states.push_back(states[s.context]);
  Var hs = social_aggregate(uw, ep.social);
  out.user_head = unary_head(uw, ad::stack_rows(step_states), hs, opt.dropout, opt.rng);
  out.unary = ad::dot(ad::gather_rows(out.user_head, cand_step), q_cand);

  out.total = ad::add(out.unary, out.transition);
  return out;
}

Episode training_episode(const data::PreparedDataset& ds, data::UserId user, const std::vector<std::size_t>& targets) {
  const auto& rec = ds.users.at(user);
  Episode ep;
  ep.user = user;
  for (const auto& t : rec.sequence) ep.history.push_back(t.item);
  ep.buckets = rec.buckets;
  ep.walks = rec.walks;
  ep.social = ds.social.of(user);
  for (auto t : targets) {
    if (t == 0 || t >= ep.history.size()) {
      throw InvalidArgument("training_episode: target step " + std::to_string(t) + " outside [1, " +
                            std::to_string(ep.history.size()) + ")");
    }
    ep.steps.push_back({t, {ep.history[t]}});
  }
  return ep;
}

Episode holdout_episode(const data::PreparedDataset& ds, data::UserId user, Holdout holdout,
                        std::vector<data::ItemId> candidates) {
  const auto& rec = ds.users.at(user);
  Episode ep;
  ep.user = user;
  ep.social = ds.social.of(user);
  for (const auto& t : rec.sequence) ep.history.push_back(t.item);
  ep.buckets = rec.buckets;
  ep.walks = rec.walks;
  if (!ep.walks.empty()) ep.walks.back() = rec.validation_walks;
  if (holdout == Holdout::kTest) {
    ep.history.push_back(rec.validation.item);
    ep.buckets.push_back(rec.test_bucket);
    ep.walks.push_back(rec.test_walks);
  }
  const std::size_t keep = ds.options.seq_len - 1;
  if (ep.history.size() > keep) {
    const auto drop = static_cast<std::ptrdiff_t>(ep.history.size() - keep);
    ep.history.erase(ep.history.begin(), ep.history.begin() + drop);
    ep.buckets.erase(ep.buckets.begin(), ep.buckets.begin() + drop);
    ep.walks.erase(ep.walks.begin(), ep.walks.begin() + drop);
  }
  ep.steps.push_back({ep.history.size(), std::move(candidates)});
  return ep;
}

}  // namespace tea::model
