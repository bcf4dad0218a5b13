// SPDX-License-Identifier: Apache-2.0
#include "tea/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tea/error.hpp"

namespace tea::ad {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw ShapeError("tensor: shape " + shape_string(shape_) + " needs " + std::to_string(shape_size(shape_)) +
                     " values, got " + std::to_string(values_.size()));
  }
}

double Tensor::item() const {
  if (values_.size() != 1) throw ShapeError("item(): tensor of shape " + shape_string(shape_) + " is not a scalar");
  return values_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Tensor::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::add_inplace(const Tensor& other, double factor) {
  if (other.size() != size()) {
    throw ShapeError("add_inplace: shapes " + shape_string(shape_) + " and " + shape_string(other.shape()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += factor * other.values_[i];
}

}  // namespace tea::ad
