#pragma once

#include <compare>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ksaqa/kb_store.hpp"
#include "ksaqa/qa_dataset.hpp"
#include "ksaqa/rng.hpp"

namespace ksaqa {

// A subject-relation reading (s, r) of a question.
struct InterpretationPair {
  EntityId subject;
  RelationId relation;

  friend bool operator==(const InterpretationPair&, const InterpretationPair&) = default;
  friend auto operator<=>(const InterpretationPair&, const InterpretationPair&) = default;
};

// Formatted question -> relations labeled with it, with record counts.
class PatternIndex {
 public:
  void add(const std::string& pattern, RelationId relation);
  // Relations seen with the pattern, ascending by id; empty when unseen.
  std::vector<RelationId> relations(const std::string& pattern) const;
  const std::map<std::string, std::map<RelationId, std::size_t>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::map<RelationId, std::size_t>> entries_;
};

struct PlausibleSet {
  std::vector<InterpretationPair> pairs;  // SR(q), sorted, unique
  std::vector<EntityId> candidates;       // S, sorted, unique

  bool contains(const InterpretationPair& p) const;
  // Relations r with (s, r) in pairs, ascending by id.
  std::vector<RelationId> relations_for(EntityId s) const;
};

struct LabeledExample {
  QuestionRecord record;
  std::optional<FormattedQuestion> formatted;
  PlausibleSet positives;  // candidates live here as well

  InterpretationPair gold() const { return {record.subject, record.relation}; }
  bool formatted_ok() const { return formatted.has_value(); }
};

// Aggregates (pattern, gold relation) over the records whose split is listed.
PatternIndex build_pattern_index(std::span<const LabeledExample> examples, std::span<const Split> splits);

// SR(q) = {(s, r) : s matches the mention, r labeled with the pattern,
// (s, r, *) in the KB} united with the gold pair.
PlausibleSet plausible_set(const QuestionRecord& record, const FormattedQuestion& formatted, const KnowledgeBase& kb,
                           const AliasTable& aliases, const PatternIndex& index);

inline bool is_ambiguous(const PlausibleSet& set) { return set.pairs.size() >= 2; }

// Formats every record with its gold subject; positives are filled when a
// pattern index is supplied (see relabel()).
std::vector<LabeledExample> format_records(std::vector<QuestionRecord> records, const AliasTable& aliases);

// Fills candidates and positives of every formatted example.
void relabel(std::vector<LabeledExample>& examples, const KnowledgeBase& kb, const AliasTable& aliases,
             const PatternIndex& index);

// Mean of is_ambiguous over examples that could be formatted; 0 when none.
double ambiguity_rate(std::span<const LabeledExample> examples);

// R(s) minus the relations paired with s in SR(q), canonical order.
std::vector<RelationId> negative_pool(const KnowledgeBase& kb, const PlausibleSet& positives, EntityId s);

// min(k, |pool|) distinct members drawn without replacement.
std::vector<RelationId> sample_negatives(std::span<const RelationId> pool, std::size_t k, Rng& rng);

struct AliasReportRow {
  std::string alias;
  std::string type;
  std::size_t count = 0;
};

struct PatternReportRow {
  std::string pattern;
  std::string relation;
  std::size_t count = 0;
};

inline constexpr std::string_view kNotableTypeRelation = "common/topic/notable_types";

// Per mention alias in the dataset: candidate entity counts grouped by
// notable type ("unknown" when the KB has none).
std::vector<AliasReportRow> alias_report(std::span<const LabeledExample> examples, const KnowledgeBase& kb,
                                         const AliasTable& aliases);
// Per pattern: relations with the number of records carrying each.
std::vector<PatternReportRow> pattern_report(const PatternIndex& index, const Symbols& symbols);

void write_alias_report(std::ostream& out, std::span<const AliasReportRow> rows);
void write_pattern_report(std::ostream& out, std::span<const PatternReportRow> rows);

}  // namespace ksaqa
