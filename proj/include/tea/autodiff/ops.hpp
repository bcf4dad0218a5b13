// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tea/autodiff/tape.hpp"
#include "tea/rng.hpp"

// Differentiable primitives. Every function records one node on the tape of
// its operands and throws ShapeError (naming the primitive and both shapes)
// when the operands do not fit.
namespace tea::ad {

/// Matrix product. A 1-D left operand is a row vector, a 1-D right operand a
/// column vector; the result drops the corresponding axis.
Var matmul(Var a, Var b);
Var transpose(Var a);

/// Elementwise sum. A 1-D right operand is broadcast over the rows of a
/// matrix left operand (bias add).
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise (Hadamard) product of equal shapes.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var one_minus(Var a);

/// Concatenation along the last axis (vectors, or matrices with equal rows).
Var concat(const std::vector<Var>& parts);
/// Vectors of equal length become matrix rows; matrices with equal columns
/// are stacked vertically.
Var stack_rows(const std::vector<Var>& parts);

Var relu(Var a);
Var leaky_relu(Var a, double negative_slope = 0.2);
Var sigmoid(Var a);
Var tanh(Var a);
/// log(1 + exp(x)), evaluated without overflow.
Var softplus(Var a);

/// Mean over matrix rows. An empty (0-row) matrix pools to the zero vector.
Var mean_pool(Var a);
Var gather_rows(Var table, std::vector<std::size_t> rows);
Var take_row(Var table, std::size_t row);
/// Row g of the result is the mean of table rows groups[g] (zero if empty).
/// Equivalent to gather_rows + mean_pool per group, fused.
Var segment_mean(Var table, std::vector<std::vector<std::size_t>> groups);
/// Repeats a vector as `n` matrix rows.
Var tile_rows(Var v, std::size_t n);

/// Inner product of two vectors (scalar result), or row-wise inner products
/// of two equal-shape matrices (vector result).
Var dot(Var a, Var b);
Var sum(Var a);

/// Softmax along the last axis restricted to entries whose mask byte is
/// nonzero; masked entries come out exactly 0. Throws InvalidArgument if a
/// row has no unmasked entry.
Var masked_softmax(Var logits, std::vector<std::uint8_t> mask);

/// Inverted dropout: each entry is zeroed with probability p and survivors
/// are scaled by 1/(1-p). p == 0 returns `a` unchanged.
Var dropout(Var a, double p, Rng& rng);

}  // namespace tea::ad
