// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tea/autodiff/tensor.hpp"

namespace tea::ad {

/// Index of a trainable tensor inside a ParameterStore.
struct ParamId {
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

/// Named trainable tensors. The store owns the values; tapes bind to it
/// read-only, optimizers write to it between steps.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor init);

  std::size_t size() const noexcept { return values_.size(); }
  Tensor& value(ParamId id) { return values_.at(id.index); }
  const Tensor& value(ParamId id) const { return values_.at(id.index); }
  const std::string& name(ParamId id) const { return names_.at(id.index); }
  std::optional<ParamId> find(const std::string& name) const;

  /// Total number of scalar entries.
  std::size_t scalar_count() const noexcept;
  bool all_finite() const noexcept;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

/// One gradient tensor per parameter, zero-initialized.
class GradientMap {
 public:
  GradientMap() = default;
  explicit GradientMap(const ParameterStore& store);

  std::size_t size() const noexcept { return grads_.size(); }
  Tensor& operator[](ParamId id) { return grads_.at(id.index); }
  const Tensor& operator[](ParamId id) const { return grads_.at(id.index); }

  void zero();
  void add(const GradientMap& other, double factor = 1.0);
  void scale(double factor);
  double global_norm() const noexcept;
  bool all_finite() const noexcept;

 private:
  std::vector<Tensor> grads_;
};

}  // namespace tea::ad
