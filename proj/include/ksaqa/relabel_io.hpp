#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "ksaqa/ambiguity.hpp"

namespace ksaqa {

// One JSON object per line:
//   {"question", "formatted", "mention", "candidates": [...],
//    "positives": [[s, r], ...], "ambiguous",
//    "subject", "relation", "object", "split", "mention_span": [b, e]}
// "formatted" and "mention" are null for records whose subject alias was not
// found in the question.
void write_relabeled(std::ostream& out, std::span<const LabeledExample> examples, const Symbols& symbols);
std::vector<LabeledExample> read_relabeled(std::istream& in, Symbols& symbols);

}  // namespace ksaqa
