#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ksaqa/ambiguity.hpp"
#include "ksaqa/entity_tagger.hpp"
#include "ksaqa/ksa_model.hpp"
#include "ksaqa/metrics.hpp"

namespace ksaqa {

// Scores for the candidate pairs of a formatted question, highest first.
using ScoreFn = std::function<std::vector<InterpretationScore>(const Tokens& formatted, std::span<const EntityId>)>;
ScoreFn model_scorer(const KsaModel& model, const KnowledgeBase& kb);

// Where the mention and candidate subjects come from.
struct SpanSource {
  // Gold spans: the stored formatted question and candidates.
  static SpanSource gold();
  // Tagger spans: predicted mention, candidates from the alias table.
  static SpanSource tagger(const EntityTagger& tagger, const AliasTable& aliases);

  struct Located {
    FormattedQuestion formatted;
    std::vector<EntityId> candidates;
  };
  // nullopt: detection failure (no span, or the span is not an alias).
  std::function<std::optional<Located>(const LabeledExample&)> locate;
};

struct EvalOptions {
  double lambda = 0.5;
  bool skip_detection_failures = false;
};

struct QuestionResult {
  std::size_t index = 0;  // position in the evaluated span
  std::vector<InterpretationPair> predicted;
  std::vector<InterpretationPair> gold;
  std::optional<InterpretationPair> top1;
  Prf1 scores;
  bool detection_failed = false;
  bool top1_correct = false;  // equals the original single gold pair
  bool hit_any = false;       // inside the plausible set
};

struct EvalReport {
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double top1_accuracy = 0.0;
  double hit_any_rate = 0.0;
  double detection_failure_rate = 0.0;
  std::size_t question_count = 0;  // questions in the averages
  std::size_t detection_failures = 0;
};

struct Evaluation {
  EvalReport report;
  std::vector<QuestionResult> questions;
};

// Predicted set = pairs with probability > lambda; top-1 = highest score.
// Detection failures score (0, 0, 0) and miss top-1 unless skipped.
Evaluation evaluate(std::span<const LabeledExample> examples, const ScoreFn& scorer, const SpanSource& spans,
                    const EvalOptions& options = {});

// Averages of already scored questions.
EvalReport summarize(std::span<const QuestionResult> results, std::size_t detection_failures,
                     std::size_t total_questions);

// Multi-label: each candidate pair (s, r), r in R(s), kept with probability
// 0.5. Top-1: a uniformly chosen candidate pair. Uses the stored spans.
Evaluation random_baseline(std::span<const LabeledExample> examples, const KnowledgeBase& kb, Rng& rng,
                           const EvalOptions& options = {});

struct AttentionMap {
  Tokens tokens;
  std::vector<double> weights;
  EntityId subject;
};

AttentionMap export_attention(const KsaModel& model, const Tokens& formatted, EntityId subject,
                              const KnowledgeBase& kb);
// token<TAB>weight per line.
void write_attention_tsv(std::ostream& out, const AttentionMap& map);
// Tokens with a bar of '#' proportional to the weight.
void write_attention_bars(std::ostream& out, const AttentionMap& map, std::size_t width = 40);

// One JSON object per question whose predicted set differs from gold.
void write_diff_report(std::ostream& out, std::span<const LabeledExample> examples,
                       std::span<const QuestionResult> results, const Symbols& symbols);

nlohmann::ordered_json to_json(const EvalReport& report);
void write_table(std::ostream& out, const EvalReport& report);

}  // namespace ksaqa
