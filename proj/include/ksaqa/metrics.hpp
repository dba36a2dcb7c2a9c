#pragma once

#include <span>

#include "ksaqa/ambiguity.hpp"

namespace ksaqa {

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Set precision/recall/F1 of predicted pairs against gold pairs. Duplicates
// are ignored. Empty prediction scores 0; F1 is 0 when P + R = 0.
Prf1 prf1(std::span<const InterpretationPair> predicted, std::span<const InterpretationPair> gold);

}  // namespace ksaqa
