// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "tea/autodiff/parameters.hpp"
#include "tea/autodiff/tape.hpp"

namespace tea::gradcheck {

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // entries sitting on a kink (one-sided slopes disagree)
  std::string worst;
};

/// rel = |a - n| / max(|a|, |n|, 1e-4)
inline double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4});
}

/// Compares reverse-mode gradients of `loss` against central differences on
/// every entry of every parameter in `store`. `loss` must be a pure function
/// of the store (fixed dropout masks, fixed samples).
inline GradCheck check_gradients(ad::ParameterStore& store, const std::function<ad::Var(ad::Tape&)>& loss,
                                 double eps = 1e-5) {
  ad::GradientMap grads(store);
  {
    ad::Tape tape;
    tape.backward(loss(tape), &grads);
  }
  auto eval = [&]() {
    ad::Tape tape(ad::Tape::Mode::kInference);
    return loss(tape).value().item();
  };
  const double f0 = eval();
  GradCheck out;
  for (std::size_t p = 0; p < store.size(); ++p) {
    const ad::ParamId id{p};
    auto& t = store.value(id);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double keep = t[i];
      t[i] = keep + eps;
      const double fp = eval();
      t[i] = keep - eps;
      const double fm = eval();
      t[i] = keep;
      const double up = (fp - f0) / eps;
      const double down = (f0 - fm) / eps;
      if (std::abs(up - down) > 1e-3 + 1e-2 * std::max(std::abs(up), std::abs(down))) {
        ++out.skipped;
        continue;
      }
      const double numeric = (fp - fm) / (2 * eps);
      const double analytic = grads[id][i];
      const double rel = relative_error(analytic, numeric);
      ++out.checked;
      if (rel > out.max_rel) {
        out.max_rel = rel;
        out.worst = store.name(id) + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic) +
                    " numeric " + std::to_string(numeric);
      }
    }
  }
  return out;
}

}  // namespace tea::gradcheck
