// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "tea/autodiff/parameters.hpp"

namespace tea::ad {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates and step counter, one moment pair per parameter.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
};

/// Bias-corrected Adam:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
class Adam {
 public:
  Adam(const ParameterStore& params, AdamConfig config);

  /// Updates every parameter in place. Throws ShapeError if a gradient does
  /// not match its parameter.
  void step(ParameterStore& params, const GradientMap& grads);

  const AdamState& state() const noexcept { return state_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  AdamState state_;
};

}  // namespace tea::ad
