// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <unordered_map>
#include <vector>

#include "tea/autodiff/parameters.hpp"
#include "tea/autodiff/tensor.hpp"

namespace tea::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records primitive applications in creation order, which is a valid
/// topological order: a node can only reference nodes created before it.
///
/// In inference mode no backward closures are kept, so the tape is just an
/// arena for intermediate values.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return mode_ == Mode::kRecord; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is kept on the tape; read it with grad().
  Var variable(Tensor value);
  /// Leaf bound to a stored parameter, without copying it. Binding the same
  /// id twice returns the same node. During backward its gradient is
  /// accumulated into the GradientMap passed to backward(), if any.
  Var parameter(const ParameterStore& store, ParamId id);

  /// Appends an interior node. `fn` is kept only when recording and at
  /// least one parent needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient accumulator of a node, allocated on first use.
  Tensor& adjoint(std::size_t id);

  /// Reverse sweep from a scalar loss. Parameter gradients are added to
  /// `grads` (not overwritten), so several tapes can accumulate into one map.
  void backward(Var loss, GradientMap* grads = nullptr);

  /// Gradient of the last backward() w.r.t. `v`; zeros if unreachable or if
  /// it was routed into a GradientMap.
  Tensor grad(Var v) const;

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    BackwardFn backward;
    Tensor adjoint;
    bool has_adjoint = false;
    bool routed = false;  // adjoint lives in the caller's GradientMap
    bool requires_grad = false;
    long param_index = -1;
  };

  Var push(Node node);

  Mode mode_;
  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, std::size_t> param_nodes_;
  GradientMap* grads_ = nullptr;
};

}  // namespace tea::ad
