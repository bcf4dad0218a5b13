// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "tea/model/episode.hpp"
#include "tea/model/tea_model.hpp"

namespace tea::fixtures {

/// Overwrites every parameter with U(-bound, bound) draws.
inline void randomize(ad::ParameterStore& s, std::uint64_t seed, double bound = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto& t = s.value(ad::ParamId{i});
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = u(rng);
  }
}

/// n = 3 users, m = 5 items, d = 4, L_s = 3.
inline model::TeaModel tiny_model(model::Variant v, std::uint64_t seed) {
  model::ModelConfig c;
  c.dim = 4;
  c.n_users = 3;
  c.n_items = 5;
  c.seq_len = 3;
  c.variant = v;
  auto m = model::TeaModel::create(c, seed);
  randomize(m.parameters(), seed * 7919 + 1);
  return m;
}

/// Two-step training-style episode on the tiny model with n_s = 2 negatives,
/// non-empty buckets, walks and neighbors.
inline model::Episode tiny_episode(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<data::ItemId> item(0, 4);
  model::Episode ep;
  ep.user = static_cast<data::UserId>(seed % 3);
  ep.history = {item(rng), item(rng), item(rng)};
  ep.buckets = {{item(rng), item(rng)}, {item(rng)}, {}};
  ep.walks = {{{(ep.user + 1) % 3, 10}}, {{(ep.user + 1) % 3, 11}, {(ep.user + 2) % 3, 12}}, {}};
  ep.social = {static_cast<data::UserId>((ep.user + 1) % 3)};
  ep.steps = {{1, {ep.history[1], item(rng), item(rng)}}, {2, {ep.history[2], item(rng), item(rng)}}};
  return ep;
}

}  // namespace tea::fixtures
