#include "ksaqa/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>

#include "ksaqa/error.hpp"

namespace ksaqa {

namespace {

nlohmann::ordered_json pair_json(const InterpretationPair& p, const Symbols& symbols) {
  return {{"subject", symbols.entities.text(p.subject)}, {"relation", symbols.relations.text(p.relation)}};
}

nlohmann::ordered_json pairs_json(std::span<const InterpretationPair> pairs, const Symbols& symbols) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& p : pairs) out.push_back(pair_json(p, symbols));
  return out;
}

QuestionResult score_question(const LabeledExample& ex, std::size_t index, std::vector<InterpretationPair> predicted,
                              std::optional<InterpretationPair> top1) {
  QuestionResult r;
  r.index = index;
  std::sort(predicted.begin(), predicted.end());
  predicted.erase(std::unique(predicted.begin(), predicted.end()), predicted.end());
  r.predicted = std::move(predicted);
  r.gold = ex.positives.pairs;
  r.top1 = top1;
  r.scores = prf1(r.predicted, r.gold);
  r.top1_correct = top1 && *top1 == ex.gold();
  r.hit_any = top1 && ex.positives.contains(*top1);
  return r;
}

QuestionResult failed_question(const LabeledExample& ex, std::size_t index) {
  QuestionResult r;
  r.index = index;
  r.gold = ex.positives.pairs;
  r.detection_failed = true;
  return r;
}

}  // namespace

ScoreFn model_scorer(const KsaModel& model, const KnowledgeBase& kb) {
  return [&model, &kb](const Tokens& formatted, std::span<const EntityId> candidates) {
    return model.score_pairs(formatted, candidates, kb);
  };
}

SpanSource SpanSource::gold() {
  return {[](const LabeledExample& ex) -> std::optional<Located> {
    if (!ex.formatted) return std::nullopt;
    return Located{*ex.formatted, ex.positives.candidates};
  }};
}

SpanSource SpanSource::tagger(const EntityTagger& tagger, const AliasTable& aliases) {
  return {[&tagger, &aliases](const LabeledExample& ex) -> std::optional<Located> {
    auto span = tagger.predict_span(ex.record.tokens);
    if (!span.detected()) return std::nullopt;
    const auto found = aliases.entities_for_alias(span.formatted->mention);
    if (found.empty()) return std::nullopt;
    return Located{std::move(*span.formatted), {found.begin(), found.end()}};
  }};
}

EvalReport summarize(std::span<const QuestionResult> results, std::size_t detection_failures,
                     std::size_t total_questions) {
  EvalReport r;
  r.question_count = results.size();
  r.detection_failures = detection_failures;
  if (total_questions > 0)
    r.detection_failure_rate = static_cast<double>(detection_failures) / static_cast<double>(total_questions);
  if (results.empty()) return r;
  std::size_t top1 = 0, hit = 0;
  for (const auto& q : results) {
    r.macro_precision += q.scores.precision;
    r.macro_recall += q.scores.recall;
    r.macro_f1 += q.scores.f1;
    top1 += q.top1_correct;
    hit += q.hit_any;
  }
  const double n = static_cast<double>(results.size());
  r.macro_precision /= n;
  r.macro_recall /= n;
  r.macro_f1 /= n;
  r.top1_accuracy = static_cast<double>(top1) / n;
  r.hit_any_rate = static_cast<double>(hit) / n;
  return r;
}

namespace {

template <typename Predict>
Evaluation run(std::span<const LabeledExample> examples, const SpanSource& spans, const EvalOptions& options,
               Predict predict) {
  Evaluation out;
  std::size_t failures = 0;
  std::vector<QuestionResult> kept;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto located = spans.locate(examples[i]);
    QuestionResult r = located ? predict(examples[i], i, *located) : failed_question(examples[i], i);
    if (r.detection_failed) ++failures;
    if (!(r.detection_failed && options.skip_detection_failures)) kept.push_back(r);
    out.questions.push_back(std::move(r));
  }
  out.report = summarize(kept, failures, examples.size());
  return out;
}

}  // namespace

Evaluation evaluate(std::span<const LabeledExample> examples, const ScoreFn& scorer, const SpanSource& spans,
                    const EvalOptions& options) {
  return run(examples, spans, options,
             [&](const LabeledExample& ex, std::size_t i, const SpanSource::Located& located) {
               const auto scores = scorer(located.formatted.tokens, located.candidates);
               std::vector<InterpretationPair> predicted;
               for (const auto& s : scores)
                 if (s.probability > options.lambda) predicted.push_back(s.pair);
               std::optional<InterpretationPair> top1;
               if (!scores.empty()) top1 = scores.front().pair;
               return score_question(ex, i, std::move(predicted), top1);
             });
}

Evaluation random_baseline(std::span<const LabeledExample> examples, const KnowledgeBase& kb, Rng& rng,
                           const EvalOptions& options) {
  return run(examples, SpanSource::gold(), options,
             [&](const LabeledExample& ex, std::size_t i, const SpanSource::Located& located) {
               std::vector<InterpretationPair> all;
               for (EntityId s : located.candidates)
                 for (RelationId r : kb.subgraph_relations(s)) all.push_back({s, r});
               std::sort(all.begin(), all.end());
               all.erase(std::unique(all.begin(), all.end()), all.end());
               std::vector<InterpretationPair> predicted;
               for (const auto& p : all)
                 if (rng.bernoulli(0.5)) predicted.push_back(p);
               std::optional<InterpretationPair> top1;
               if (!all.empty()) top1 = all[rng.below(all.size())];
               return score_question(ex, i, std::move(predicted), top1);
             });
}

AttentionMap export_attention(const KsaModel& model, const Tokens& formatted, EntityId subject,
                              const KnowledgeBase& kb) {
  return {formatted, model.attention_weights(formatted, subject, kb), subject};
}

void write_attention_tsv(std::ostream& out, const AttentionMap& map) {
  out << "token\tweight\n";
  for (std::size_t i = 0; i < map.tokens.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", map.weights[i]);
    out << map.tokens[i] << '\t' << buf << '\n';
  }
}

void write_attention_bars(std::ostream& out, const AttentionMap& map, std::size_t width) {
  std::size_t pad = 0;
  for (const auto& t : map.tokens) pad = std::max(pad, t.size());
  for (std::size_t i = 0; i < map.tokens.size(); ++i) {
    const auto n = static_cast<std::size_t>(map.weights[i] * static_cast<double>(width) + 0.5);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", map.weights[i]);
    out << std::left << std::setw(static_cast<int>(pad)) << map.tokens[i] << "  " << buf << "  "
        << std::string(n, '#') << '\n';
  }
}

void write_diff_report(std::ostream& out, std::span<const LabeledExample> examples,
                       std::span<const QuestionResult> results, const Symbols& symbols) {
  for (const auto& r : results) {
    if (r.predicted == r.gold) continue;
    const LabeledExample& ex = examples[r.index];
    std::vector<InterpretationPair> over, under;
    std::set_difference(r.predicted.begin(), r.predicted.end(), r.gold.begin(), r.gold.end(), std::back_inserter(over));
    std::set_difference(r.gold.begin(), r.gold.end(), r.predicted.begin(), r.predicted.end(), std::back_inserter(under));
    nlohmann::ordered_json j;
    j["question"] = ex.record.text;
    j["formatted"] = ex.formatted ? ex.formatted->key() : "";
    j["detection_failed"] = r.detection_failed;
    j["gold"] = pairs_json(r.gold, symbols);
    j["predicted"] = pairs_json(r.predicted, symbols);
    j["over"] = pairs_json(over, symbols);
    j["under"] = pairs_json(under, symbols);
    out << j.dump() << '\n';
  }
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  return {{"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"macro_f1", r.macro_f1},
          {"top1_accuracy", r.top1_accuracy},
          {"hit_any_rate", r.hit_any_rate},
          {"question_count", r.question_count},
          {"detection_failures", r.detection_failures},
          {"detection_failure_rate", r.detection_failure_rate}};
}

void write_table(std::ostream& out, const EvalReport& r) {
  auto line = [&](const char* name, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-24s %8.2f\n", name, 100.0 * v);
    out << buf;
  };
  line("macro precision (%)", r.macro_precision);
  line("macro recall (%)", r.macro_recall);
  line("macro F1 (%)", r.macro_f1);
  line("top-1 accuracy (%)", r.top1_accuracy);
  line("hit-any rate (%)", r.hit_any_rate);
  line("detection failures (%)", r.detection_failure_rate);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-24s %8zu\n", "questions", r.question_count);
  out << buf;
}

}  // namespace ksaqa
