#pragma once

#include <string>
#include <vector>

#include "ksaqa/parameters.hpp"
#include "ksaqa/tape.hpp"

namespace ksaqa {

// Gated recurrent unit:
//   z  = sigmoid(x W_z + h U_z + b_z)
//   r  = sigmoid(x W_r + h U_r + b_r)
//   n  = tanh(x W_n + (r * h) U_n + b_n)
//   h' = (1 - z) * n + z * h
class Gru {
 public:
  Gru(ParameterStore& params, const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng);

  std::size_t input_size() const { return input_; }
  std::size_t hidden_size() const { return hidden_; }

  // One step for a single input row x [1 x input] and state h [1 x hidden].
  Var cell(Tape& tape, Var x, Var h) const;

  // Runs over the rows of `inputs` [m x input] from h0. Returns the m states
  // stacked [m x hidden], row t aligned with input row t in both directions.
  // The final state is row m-1 (forward) or row 0 (reverse).
  Var run(Tape& tape, Var inputs, Var h0, bool reverse = false) const;

  Var zero_state(Tape& tape) const;

 private:
  Var step(Tape& tape, Var xz, Var xr, Var xn, Var h) const;

  std::size_t input_;
  std::size_t hidden_;
  const Parameter* w_z_;
  const Parameter* w_r_;
  const Parameter* w_n_;
  const Parameter* u_z_;
  const Parameter* u_r_;
  const Parameter* u_n_;
  const Parameter* b_z_;
  const Parameter* b_r_;
  const Parameter* b_n_;
};

// Forward and backward Gru over the same inputs.
class BiGru {
 public:
  BiGru(ParameterStore& params, const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng);

  struct Output {
    Var states;        // [m x 2*hidden], row t = [forward_t ; backward_t]
    Var final_states;  // [1 x 2*hidden] = [forward_{m-1} ; backward_0]
  };

  Output run(Tape& tape, Var inputs) const;
  std::size_t hidden_size() const { return forward_.hidden_size(); }

 private:
  Gru forward_;
  Gru backward_;
};

}  // namespace ksaqa
