#include "ksaqa/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace ksaqa {

namespace {

double evaluate(const LossFn& loss) {
  Tape tape(Tape::Mode::inference);
  return loss(tape).value().item();
}

}  // namespace

GradCheckResult grad_check(ParameterStore& params, const LossFn& loss, double h) {
  params.zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    tape.backward(l);
    params.accumulate(tape);
  }
  GradCheckResult result;
  for (const auto& p : params) {
    auto w = p->value.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      auto at = [&](double offset) {
        w[i] = saved + offset;
        return evaluate(loss);
      };
      const double near = at(h) - at(-h);
      const double far = at(2 * h) - at(-2 * h);
      const double numeric = (8 * near - far) / (12.0 * h);
      w[i] = saved;
      const double analytic = p->grad[i];
      const double err = std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++result.coordinates;
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = std::max(err, result.max_relative_error);
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.analytic = analytic;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace ksaqa
