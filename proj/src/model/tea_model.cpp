// SPDX-License-Identifier: Apache-2.0
#include "tea/model/tea_model.hpp"

#include <algorithm>
#include <cctype>

#include "tea/autodiff/init.hpp"
#include "tea/error.hpp"
#include "tea/rng.hpp"

namespace tea::model {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kTeaS: return "tea-s";
    case Variant::kTeaA: return "tea-a";
    case Variant::kTeaRS: return "tea-rs";
    case Variant::kTeaRA: return "tea-ra";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "tea-s") return Variant::kTeaS;
  if (n == "tea-a") return Variant::kTeaA;
  if (n == "tea-rs") return Variant::kTeaRS;
  if (n == "tea-ra") return Variant::kTeaRA;
  throw InvalidArgument("unknown variant '" + name + "' (expected tea-s, tea-a, tea-rs or tea-ra)");
}

Aggregator aggregator_of(Variant v) {
  return (v == Variant::kTeaA || v == Variant::kTeaRA) ? Aggregator::kAttention : Aggregator::kSage;
}

bool uses_walks(Variant v) { return v == Variant::kTeaS || v == Variant::kTeaA; }

TeaModel TeaModel::create(const ModelConfig& c, std::uint64_t seed) {
  if (c.dim == 0 || c.n_users == 0 || c.n_items == 0 || c.seq_len == 0) {
    throw InvalidArgument("model: dim, user count, item count and sequence length must be positive");
  }
  Rng rng = derive_rng(seed, {kStreamInit});
  const std::size_t d = c.dim;
  ad::ParameterStore s;
  using ad::fan_in_uniform;
  using ad::uniform_tensor;
  const double e = ad::kEmbeddingInitBound;
  s.add("emb.user", uniform_tensor({c.n_users, d}, e, rng));
  s.add("emb.item", uniform_tensor({c.n_items, d}, e, rng));
  s.add("emb.position", uniform_tensor({c.seq_len, d}, e, rng));

  s.add("g.w_q", fan_in_uniform({d, d}, d, rng));
  s.add("g.w_k", fan_in_uniform({d, d}, d, rng));
  s.add("g.w_v", fan_in_uniform({d, d}, d, rng));
  s.add("g.w1", fan_in_uniform({d, d}, d, rng));
  s.add("g.b1", fan_in_uniform({d}, d, rng));
  s.add("g.w2", fan_in_uniform({d, d}, d, rng));
  s.add("g.b2", fan_in_uniform({d}, d, rng));
  s.add("g.w3", fan_in_uniform({d, 4 * d}, 4 * d, rng));
  if (uses_walks(c.variant)) ad::GruBlock::create(s, "g.walk_gru", d, rng);

  s.add("f.w_a", fan_in_uniform({d, d}, d, rng));
  if (aggregator_of(c.variant) == Aggregator::kAttention) s.add("f.att", fan_in_uniform({2 * d}, 2 * d, rng));
  s.add("f.w_s", fan_in_uniform({d, d}, d, rng));
  ad::GruBlock::create(s, "f.gru", d, rng);
  s.add("f.w1", fan_in_uniform({d, 2 * d}, 2 * d, rng));
  s.add("f.b1", fan_in_uniform({d}, 2 * d, rng));
  s.add("f.w2", fan_in_uniform({d, d}, d, rng));
  s.add("f.b2", fan_in_uniform({d}, d, rng));

  return from_parameters(c, std::move(s));
}

TeaModel TeaModel::from_parameters(const ModelConfig& config, ad::ParameterStore params) {
  TeaModel m;
  m.config_ = config;
  m.params_ = std::move(params);
  m.resolve();
  return m;
}

void TeaModel::resolve() {
  const std::size_t d = config_.dim;
  auto need = [&](const std::string& name, ad::Shape shape) {
    auto id = params_.find(name);
    if (!id) throw Incompatible("model: missing parameter '" + name + "'");
    if (params_.value(*id).shape() != shape) {
      throw Incompatible("model: parameter '" + name + "' has shape " + ad::shape_string(params_.value(*id).shape()) +
                         ", expected " + ad::shape_string(shape));
    }
    return *id;
  };
  shared_.users = need("emb.user", {config_.n_users, d});
  shared_.items = need("emb.item", {config_.n_items, d});
  shared_.positions = need("emb.position", {config_.seq_len, d});

  transition_.w_q = need("g.w_q", {d, d});
  transition_.w_k = need("g.w_k", {d, d});
  transition_.w_v = need("g.w_v", {d, d});
  transition_.w1 = need("g.w1", {d, d});
  transition_.b1 = need("g.b1", {d});
  transition_.w2 = need("g.w2", {d, d});
  transition_.b2 = need("g.b2", {d});
  transition_.w3 = need("g.w3", {d, 4 * d});
  transition_.walk_gru.reset();
  if (uses_walks(config_.variant)) {
    transition_.walk_gru = ad::GruBlock::find(params_, "g.walk_gru");
    if (transition_.walk_gru->dim != d) throw Incompatible("model: walk GRU dimension mismatch");
  }

  unary_.w_a = need("f.w_a", {d, d});
  unary_.att.reset();
  if (aggregator_of(config_.variant) == Aggregator::kAttention) unary_.att = need("f.att", {2 * d});
  unary_.w_s = need("f.w_s", {d, d});
  unary_.temporal_gru = ad::GruBlock::find(params_, "f.gru");
  if (unary_.temporal_gru.dim != d) throw Incompatible("model: temporal GRU dimension mismatch");
  unary_.w1 = need("f.w1", {d, 2 * d});
  unary_.b1 = need("f.b1", {d});
  unary_.w2 = need("f.w2", {d, d});
  unary_.b2 = need("f.b2", {d});
}

}  // namespace tea::model
