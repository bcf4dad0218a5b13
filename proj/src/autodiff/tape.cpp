// SPDX-License-Identifier: Apache-2.0
#include "tea/autodiff/tape.hpp"

#include "tea/error.hpp"

namespace tea::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = recording();
  return push(std::move(n));
}

Var Tape::parameter(const ParameterStore& store, ParamId id) {
  if (auto it = param_nodes_.find(id.index); it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.external = &store.value(id);
  n.requires_grad = recording();
  n.param_index = static_cast<long>(id.index);
  Var v = push(std::move(n));
  param_nodes_.emplace(id.index, v.id());
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  Node n;
  n.owned = std::move(value);
  if (recording()) {
    for (const Var& p : parents) {
      if (p.tape_ != this) throw InvalidArgument("operand recorded on a different tape");
      n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  return push(std::move(n));
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
  Node n;
  n.owned = std::move(value);
  if (recording()) {
    for (const Var& p : parents) {
      if (p.tape_ != this) throw InvalidArgument("operand recorded on a different tape");
      n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  return push(std::move(n));
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.owned;
}

Tensor& Tape::adjoint(std::size_t id) {
  Node& n = nodes_[id];
  if (n.param_index >= 0 && grads_ != nullptr) {
    n.has_adjoint = true;
    n.routed = true;
    return (*grads_)[ParamId{static_cast<std::size_t>(n.param_index)}];
  }
  if (!n.has_adjoint) {
    n.adjoint = Tensor(value(id).shape());
    n.has_adjoint = true;
  }
  return n.adjoint;
}

void Tape::backward(Var loss, GradientMap* grads) {
  if (loss.tape_ != this) throw InvalidArgument("backward: loss belongs to a different tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_string(loss.shape()));
  }
  if (!recording()) throw InvalidArgument("backward: tape was created in inference mode");
  for (Node& n : nodes_) {
    n.has_adjoint = false;
    n.routed = false;
    n.adjoint = Tensor();
  }
  grads_ = grads;
  if (nodes_[loss.id_].requires_grad) {
    adjoint(loss.id_)[0] += 1.0;
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.has_adjoint && n.backward) n.backward(*this, i);
    }
  }
  grads_ = nullptr;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id_];
  if (n.has_adjoint && !n.routed) return n.adjoint;
  return Tensor(value(v.id_).shape());
}

}  // namespace tea::ad
