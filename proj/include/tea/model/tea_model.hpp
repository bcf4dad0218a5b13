// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "tea/autodiff/gru.hpp"
#include "tea/autodiff/parameters.hpp"

namespace tea::model {

/// TEA-S / TEA-A use mean-pool / attention bipartite aggregation; the -R
/// ablations additionally drop the time-restricted walk aggregation.
enum class Variant { kTeaS, kTeaA, kTeaRS, kTeaRA };
enum class Aggregator { kSage, kAttention };

std::string to_string(Variant v);
/// Accepts "tea-s", "tea-a", "tea-rs", "tea-ra" (case-insensitive).
Variant parse_variant(const std::string& name);
Aggregator aggregator_of(Variant v);
bool uses_walks(Variant v);

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t seq_len = 50;  // rows of the position table
  Variant variant = Variant::kTeaS;
};

/// p, q, k: shared by both score functions and stored once.
struct SharedEmbeddings {
  ad::ParamId users, items, positions;
};

/// Trainable weights of the transition score g (besides the shared tables).
struct TransitionParams {
  ad::ParamId w_q, w_k, w_v;
  ad::ParamId w1, b1, w2, b2;
  ad::ParamId w3;                     // d x 4d
  std::optional<ad::GruBlock> walk_gru;  // absent for TEA-RS / TEA-RA
};

/// Trainable weights of the unary score f (besides the shared tables).
struct UnaryParams {
  ad::ParamId w_a;                     // bipartite projection
  std::optional<ad::ParamId> att;      // 2d attention vector, TEA-A / TEA-RA only
  ad::ParamId w_s;                     // social projection
  ad::GruBlock temporal_gru;
  ad::ParamId w1, b1, w2, b2;          // w1: d x 2d
};

class TeaModel {
 public:
  /// Fresh parameters: embeddings U(-0.01, 0.01), everything else
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static TeaModel create(const ModelConfig& config, std::uint64_t seed);
  /// Adopts an existing store (e.g. from a checkpoint). Throws Incompatible if
  /// a tensor is missing or has the wrong shape.
  static TeaModel from_parameters(const ModelConfig& config, ad::ParameterStore params);

  const ModelConfig& config() const noexcept { return config_; }
  ad::ParameterStore& parameters() noexcept { return params_; }
  const ad::ParameterStore& parameters() const noexcept { return params_; }
  const SharedEmbeddings& embeddings() const noexcept { return shared_; }
  const TransitionParams& transition() const noexcept { return transition_; }
  const UnaryParams& unary() const noexcept { return unary_; }

 private:
  TeaModel() = default;
  void resolve();

  ModelConfig config_;
  ad::ParameterStore params_;
  SharedEmbeddings shared_;
  TransitionParams transition_;
  UnaryParams unary_;
};

}  // namespace tea::model
