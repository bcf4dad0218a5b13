// SPDX-License-Identifier: Apache-2.0
#include "tea/autodiff/parameters.hpp"

#include <cmath>

#include "tea/error.hpp"

namespace tea::ad {

ParamId ParameterStore::add(std::string name, Tensor init) {
  if (find(name)) throw InvalidArgument("parameter '" + name + "' registered twice");
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return ParamId{values_.size() - 1};
}

std::optional<ParamId> ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return ParamId{i};
  return std::nullopt;
}

std::size_t ParameterStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

bool ParameterStore::all_finite() const noexcept {
  for (const auto& v : values_)
    if (!v.all_finite()) return false;
  return true;
}

GradientMap::GradientMap(const ParameterStore& store) {
  grads_.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) grads_.emplace_back(store.value(ParamId{i}).shape());
}

void GradientMap::zero() {
  for (auto& g : grads_) g.fill(0.0);
}

void GradientMap::add(const GradientMap& other, double factor) {
  if (other.grads_.size() != grads_.size()) throw ShapeError("GradientMap::add: parameter count mismatch");
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i].add_inplace(other.grads_[i], factor);
}

void GradientMap::scale(double factor) {
  for (auto& g : grads_)
    for (double& v : g.values()) v *= factor;
}

double GradientMap::global_norm() const noexcept {
  double s = 0.0;
  for (const auto& g : grads_) s += g.squared_norm();
  return std::sqrt(s);
}

bool GradientMap::all_finite() const noexcept {
  for (const auto& g : grads_)
    if (!g.all_finite()) return false;
  return true;
}

}  // namespace tea::ad
