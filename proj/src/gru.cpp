#include "ksaqa/gru.hpp"

#include "ksaqa/error.hpp"
#include "ksaqa/ops.hpp"

namespace ksaqa {

Gru::Gru(ParameterStore& params, const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng)
    : input_(input), hidden_(hidden) {
  w_z_ = &params.add(prefix + ".W_z", {input, hidden}, Init::xavier_uniform, rng);
  w_r_ = &params.add(prefix + ".W_r", {input, hidden}, Init::xavier_uniform, rng);
  w_n_ = &params.add(prefix + ".W_n", {input, hidden}, Init::xavier_uniform, rng);
  u_z_ = &params.add(prefix + ".U_z", {hidden, hidden}, Init::xavier_uniform, rng);
  u_r_ = &params.add(prefix + ".U_r", {hidden, hidden}, Init::xavier_uniform, rng);
  u_n_ = &params.add(prefix + ".U_n", {hidden, hidden}, Init::xavier_uniform, rng);
  b_z_ = &params.add(prefix + ".b_z", {hidden}, Init::zeros, rng);
  b_r_ = &params.add(prefix + ".b_r", {hidden}, Init::zeros, rng);
  b_n_ = &params.add(prefix + ".b_n", {hidden}, Init::zeros, rng);
}

Var Gru::zero_state(Tape& tape) const { return tape.constant(Tensor({1, hidden_})); }

Var Gru::step(Tape& tape, Var xz, Var xr, Var xn, Var h) const {
  using namespace ops;
  Var z = sigmoid(add(xz, matmul(h, tape.param(*u_z_))));
  Var r = sigmoid(add(xr, matmul(h, tape.param(*u_r_))));
  Var n = ops::tanh(add(xn, matmul(mul(r, h), tape.param(*u_n_))));
  return add(n, mul(z, sub(h, n)));
}

Var Gru::cell(Tape& tape, Var x, Var h) const {
  using namespace ops;
  if (x.value().cols() != input_)
    throw ShapeError("GRU input width " + std::to_string(x.value().cols()) + " != " + std::to_string(input_));
  Var xz = add(matmul(x, tape.param(*w_z_)), tape.param(*b_z_));
  Var xr = add(matmul(x, tape.param(*w_r_)), tape.param(*b_r_));
  Var xn = add(matmul(x, tape.param(*w_n_)), tape.param(*b_n_));
  return step(tape, xz, xr, xn, h);
}

Var Gru::run(Tape& tape, Var inputs, Var h0, bool reverse) const {
  using namespace ops;
  const std::size_t m = inputs.value().rows();
  if (m == 0) throw ShapeError("GRU run over empty sequence");
  if (inputs.value().cols() != input_)
    throw ShapeError("GRU input width " + std::to_string(inputs.value().cols()) + " != " + std::to_string(input_));
  // Input projections for all steps at once.
  Var xz = add(matmul(inputs, tape.param(*w_z_)), tape.param(*b_z_));
  Var xr = add(matmul(inputs, tape.param(*w_r_)), tape.param(*b_r_));
  Var xn = add(matmul(inputs, tape.param(*w_n_)), tape.param(*b_n_));
  std::vector<Var> states(m);
  Var h = h0;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t t = reverse ? m - 1 - k : k;
    h = step(tape, row(xz, t), row(xr, t), row(xn, t), h);
    states[t] = h;
  }
  return m == 1 ? states[0] : concat(states, 0);
}

BiGru::BiGru(ParameterStore& params, const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng)
    : forward_(params, prefix + ".forward", input, hidden, rng),
      backward_(params, prefix + ".backward", input, hidden, rng) {}

BiGru::Output BiGru::run(Tape& tape, Var inputs) const {
  using namespace ops;
  Var fwd = forward_.run(tape, inputs, forward_.zero_state(tape));
  Var bwd = backward_.run(tape, inputs, backward_.zero_state(tape), true);
  const std::size_t m = inputs.value().rows();
  Output out;
  out.states = concat({fwd, bwd}, 1);
  out.final_states = concat({row(fwd, m - 1), row(bwd, 0)}, 1);
  return out;
}

}  // namespace ksaqa
