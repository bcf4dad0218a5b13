// SPDX-License-Identifier: Apache-2.0
#include "tea/autodiff/gru.hpp"

#include "tea/autodiff/init.hpp"
#include "tea/autodiff/ops.hpp"
#include "tea/error.hpp"

namespace tea::ad {
namespace {

ParamId lookup(const ParameterStore& store, const std::string& name) {
  auto id = store.find(name);
  if (!id) throw Incompatible("missing parameter '" + name + "'");
  return *id;
}

}  // namespace

GruBlock GruBlock::create(ParameterStore& store, const std::string& prefix, std::size_t dim, Rng& rng) {
  GruBlock b;
  b.dim = dim;
  auto mat = [&](const char* n) { return store.add(prefix + "." + n, fan_in_uniform({dim, dim}, dim, rng)); };
  auto vec = [&](const char* n) { return store.add(prefix + "." + n, fan_in_uniform({dim}, dim, rng)); };
  b.w_z = mat("w_z");
  b.u_z = mat("u_z");
  b.b_z = vec("b_z");
  b.w_r = mat("w_r");
  b.u_r = mat("u_r");
  b.b_r = vec("b_r");
  b.w_h = mat("w_h");
  b.u_h = mat("u_h");
  b.b_h = vec("b_h");
  return b;
}

GruBlock GruBlock::find(const ParameterStore& store, const std::string& prefix) {
  GruBlock b;
  b.w_z = lookup(store, prefix + ".w_z");
  b.u_z = lookup(store, prefix + ".u_z");
  b.b_z = lookup(store, prefix + ".b_z");
  b.w_r = lookup(store, prefix + ".w_r");
  b.u_r = lookup(store, prefix + ".u_r");
  b.b_r = lookup(store, prefix + ".b_r");
  b.w_h = lookup(store, prefix + ".w_h");
  b.u_h = lookup(store, prefix + ".u_h");
  b.b_h = lookup(store, prefix + ".b_h");
  b.dim = store.value(b.b_z).size();
  return b;
}

GruWeights GruWeights::bind(Tape& tape, const ParameterStore& store, const GruBlock& block) {
  GruWeights w;
  w.w_z = tape.parameter(store, block.w_z);
  w.u_z = tape.parameter(store, block.u_z);
  w.b_z = tape.parameter(store, block.b_z);
  w.w_r = tape.parameter(store, block.w_r);
  w.u_r = tape.parameter(store, block.u_r);
  w.b_r = tape.parameter(store, block.b_r);
  w.w_h = tape.parameter(store, block.w_h);
  w.u_h = tape.parameter(store, block.u_h);
  w.b_h = tape.parameter(store, block.b_h);
  w.dim = block.dim;
  return w;
}

Var gru_cell(Var input, Var hidden, const GruWeights& w) {
  const Shape expected{w.dim};
  if (input.shape() != expected || hidden.shape() != expected) {
    throw ShapeError("gru_cell: expected input and hidden " + shape_string(expected) + ", got " +
                     shape_string(input.shape()) + " and " + shape_string(hidden.shape()));
  }
  Var z = sigmoid(add(add(matmul(w.w_z, input), matmul(w.u_z, hidden)), w.b_z));
  Var r = sigmoid(add(add(matmul(w.w_r, input), matmul(w.u_r, hidden)), w.b_r));
  Var candidate = tanh(add(add(matmul(w.w_h, input), matmul(w.u_h, mul(r, hidden))), w.b_h));
  return add(mul(z, hidden), mul(one_minus(z), candidate));
}

}  // namespace tea::ad
