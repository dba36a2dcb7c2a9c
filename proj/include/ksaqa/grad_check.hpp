#pragma once

#include <functional>
#include <string>

#include "ksaqa/parameters.hpp"
#include "ksaqa/tape.hpp"

namespace ksaqa {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Builds the scalar loss on the given tape. Must be a pure function of the
// parameter values (reseed any Rng inside).
using LossFn = std::function<Var(Tape&)>;

// Compares reverse-mode gradients against the five-point central difference
// (f(x-2h) - 8f(x-h) + 8f(x+h) - f(x+2h)) / 12h for every coordinate of every
// parameter in `params`. Per-coordinate error is
// |g_a - g_n| / max(1e-8, |g_a| + |g_n|); the maximum is reported.
GradCheckResult grad_check(ParameterStore& params, const LossFn& loss, double h = 1e-3);

}  // namespace ksaqa
