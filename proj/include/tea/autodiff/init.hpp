// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>

#include "tea/autodiff/tensor.hpp"
#include "tea/rng.hpp"

namespace tea::ad {

inline Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

/// U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
inline Tensor fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  return uniform_tensor(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

inline constexpr double kEmbeddingInitBound = 0.01;

}  // namespace tea::ad
