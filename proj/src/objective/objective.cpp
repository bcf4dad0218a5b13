// SPDX-License-Identifier: Apache-2.0
#include "tea/objective/objective.hpp"

#include <algorithm>
#include <cmath>

#include "tea/error.hpp"

namespace tea::objective {
namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double sequence_loss(const std::vector<ScoredStep>& batch, std::size_t n_negatives) {
  if (batch.empty()) throw InvalidArgument("sequence_loss: empty batch");
  double total = 0.0;
  for (const auto& s : batch) {
    if (s.negatives.size() != n_negatives) {
      throw InvalidArgument("sequence_loss: step has " + std::to_string(s.negatives.size()) + " negatives, expected " +
                            std::to_string(n_negatives));
    }
    double term = softplus(-s.positive);
    for (double n : s.negatives) term += softplus(n);
    total += term;
  }
  return total / static_cast<double>(batch.size());
}

ad::Var episode_loss_sum(ad::Var scores, const std::vector<std::size_t>& offsets) {
  if (scores.shape().size() != 1 || offsets.size() < 2 || offsets.back() != scores.shape()[0]) {
    throw ShapeError("episode_loss_sum: offsets do not cover scores " + ad::shape_string(scores.shape()));
  }
  std::vector<double> sign(scores.shape()[0], 1.0);
  for (std::size_t k = 0; k + 1 < offsets.size(); ++k) {
    if (offsets[k + 1] <= offsets[k]) throw InvalidArgument("episode_loss_sum: empty step");
    sign[offsets[k]] = -1.0;
  }
  ad::Var flipped = ad::mul(scores, scores.tape().constant(ad::Tensor::vector(std::move(sign))));
  return ad::sum(ad::softplus(flipped));
}

double squared_norm(const ad::ParameterStore& params) {
  double s = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) s += params.value(ad::ParamId{i}).squared_norm();
  return s;
}

double total_loss(double crf, const ad::ParameterStore& params, double gamma) {
  return crf + gamma * squared_norm(params);
}

ad::Var total_loss(ad::Var crf, const ad::ParameterStore& params, double gamma) {
  ad::Tape& tape = crf.tape();
  ad::Var out = crf;
  if (gamma == 0.0) return out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Var p = tape.parameter(params, ad::ParamId{i});
    out = ad::add(out, ad::scale(ad::sum(ad::mul(p, p)), gamma));
  }
  return out;
}

std::vector<double> exact_conditional(std::span<const double> scores) {
  if (scores.empty()) return {};
  const double mx = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) z += (p[i] = std::exp(scores[i] - mx));
  for (auto& v : p) v /= z;
  return p;
}

double predict_probability(double f, double g) {
  const double x = f + g;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace tea::objective
