#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ksaqa/tape.hpp"
#include "ksaqa/tensor.hpp"

namespace ksaqa {

// Per-token labels; 1 = inside the subject mention.
using TagSequence = std::vector<int>;

// Scores of a linear-chain CRF over K labels. `start` and `stop` are [K]
// rows added to the first and last label; empty tensors mean zero.
struct CrfScores {
  const Tensor& emissions;    // [m x K]
  const Tensor& transitions;  // [K x K], from row label to column label
  const Tensor& start;
  const Tensor& stop;
};

double crf_sequence_score(const CrfScores& s, std::span<const int> tags);
// log of the sum over all K^m sequences of exp(score), by the forward algorithm.
double crf_log_partition(const CrfScores& s);
// score(tags) - log Z. Throws ShapeError when the lengths differ.
double crf_log_likelihood(const CrfScores& s, std::span<const int> tags);

// Highest-scoring sequence. Ties prefer the lower label, deciding from the
// last token backwards.
TagSequence viterbi_decode(const CrfScores& s);

namespace ops {
// Rank-0 negative log likelihood -(score(tags) - log Z), differentiable in
// all four score tensors. start and stop are [1 x K].
Var crf_nll(Var emissions, Var transitions, Var start, Var stop, std::span<const int> tags);
}  // namespace ops

}  // namespace ksaqa
