#include "ksaqa/metrics.hpp"

#include <algorithm>
#include <vector>

namespace ksaqa {

namespace {

std::vector<InterpretationPair> as_set(std::span<const InterpretationPair> pairs) {
  std::vector<InterpretationPair> out(pairs.begin(), pairs.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

Prf1 prf1(std::span<const InterpretationPair> predicted, std::span<const InterpretationPair> gold) {
  const auto p = as_set(predicted);
  const auto g = as_set(gold);
  std::vector<InterpretationPair> both;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(both));
  Prf1 out;
  const double hit = static_cast<double>(both.size());
  if (!p.empty()) out.precision = hit / static_cast<double>(p.size());
  if (!g.empty()) out.recall = hit / static_cast<double>(g.size());
  if (out.precision + out.recall > 0) out.f1 = 2 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

}  // namespace ksaqa
