// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "tea/autodiff/parameters.hpp"
#include "tea/autodiff/tape.hpp"
#include "tea/rng.hpp"

namespace tea::ad {

/// Parameter ids of one GRU cell with input and hidden size `dim`.
///
///   z  = sigmoid(W_z x + U_z h + b_z)          update gate
///   r  = sigmoid(W_r x + U_r h + b_r)          reset gate
///   h~ = tanh(W_h x + U_h (r * h) + b_h)       candidate
///   h' = z * h + (1 - z) * h~
struct GruBlock {
  ParamId w_z, u_z, b_z;
  ParamId w_r, u_r, b_r;
  ParamId w_h, u_h, b_h;
  std::size_t dim = 0;

  /// Registers the nine tensors as "<prefix>.w_z", ... with fan-in uniform init.
  static GruBlock create(ParameterStore& store, const std::string& prefix, std::size_t dim, Rng& rng);
  /// Looks up an existing block by prefix.
  static GruBlock find(const ParameterStore& store, const std::string& prefix);
};

/// Tape handles for a GruBlock.
struct GruWeights {
  Var w_z, u_z, b_z;
  Var w_r, u_r, b_r;
  Var w_h, u_h, b_h;
  std::size_t dim = 0;

  static GruWeights bind(Tape& tape, const ParameterStore& store, const GruBlock& block);
};

/// One GRU step. Throws ShapeError unless input and hidden are vectors of size `w.dim`.
Var gru_cell(Var input, Var hidden, const GruWeights& w);

}  // namespace tea::ad
