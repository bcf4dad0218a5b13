// SPDX-License-Identifier: Apache-2.0
#include "tea/autodiff/adam.hpp"

#include <cmath>

#include "tea/error.hpp"

namespace tea::ad {

Adam::Adam(const ParameterStore& params, AdamConfig config) : config_(config) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = params.value(ParamId{i});
    state_.m.emplace_back(p.shape());
    state_.v.emplace_back(p.shape());
  }
}

void Adam::step(ParameterStore& params, const GradientMap& grads) {
  if (grads.size() != params.size() || state_.m.size() != params.size()) {
    throw ShapeError("adam: parameter count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamId id{i};
    if (grads[id].shape() != params.value(id).shape()) {
      throw ShapeError("adam: gradient " + shape_string(grads[id].shape()) + " for parameter '" + params.name(id) +
                       "' of shape " + shape_string(params.value(id).shape()));
    }
  }
  ++state_.t;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state_.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state_.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamId id{i};
    auto theta = params.value(id).values();
    auto g = grads[id].values();
    auto m = state_.m[i].values();
    auto v = state_.v[i].values();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      theta[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace tea::ad
