#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ksaqa/rng.hpp"
#include "ksaqa/tape.hpp"

namespace ksaqa {

class Parameter;

// Differentiable primitives. Rank-1 inputs behave as single rows; outputs
// are rank 2 unless noted. Shape mismatches throw ShapeError naming both
// shapes.
namespace ops {

Var matmul(Var a, Var b);
// Same shape, or b a single row broadcast over the rows of a.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);

// axis 0 stacks rows, axis 1 joins columns.
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var row(Var a, std::size_t r);
Var transpose(Var a);
Var repeat_rows(Var a, std::size_t times);

Var sigmoid(Var a);
Var tanh(Var a);
// Over all elements, with max subtraction.
Var softmax(Var a);
// Rank-0 sum of all elements.
Var sum(Var a);

// Rows of an embedding table; gradients are scattered sparsely onto the tape.
Var embedding_lookup(Tape& tape, const Parameter& table, std::span<const std::size_t> rows);
// Flat-index selection into a [1 x k] row.
Var gather(Var a, std::span<const std::size_t> indices);

// Inverted dropout: survivors scaled by 1/(1-rate). Identity when !train or rate == 0.
Var dropout(Var a, double rate, bool train, Rng& rng);

// Sum over elements of -[y log sigmoid(x) + (1-y) log(1 - sigmoid(x))],
// evaluated from the logits x. Rank-0 result.
Var binary_cross_entropy(Var logits, const Tensor& labels);

}  // namespace ops

// Numerically stable log(1 + exp(x)).
double softplus(double x);
double sigmoid(double x);

}  // namespace ksaqa
