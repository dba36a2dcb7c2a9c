#include "ksaqa/ambiguity.hpp"

#include <algorithm>
#include <unordered_set>

namespace ksaqa {

void PatternIndex::add(const std::string& pattern, RelationId relation) { ++entries_[pattern][relation]; }

std::vector<RelationId> PatternIndex::relations(const std::string& pattern) const {
  std::vector<RelationId> out;
  auto it = entries_.find(pattern);
  if (it == entries_.end()) return out;
  for (const auto& [r, _] : it->second) out.push_back(r);
  return out;
}

bool PlausibleSet::contains(const InterpretationPair& p) const {
  return std::binary_search(pairs.begin(), pairs.end(), p);
}

std::vector<RelationId> PlausibleSet::relations_for(EntityId s) const {
  std::vector<RelationId> out;
  auto it = std::lower_bound(pairs.begin(), pairs.end(), InterpretationPair{s, RelationId{0}});
  for (; it != pairs.end() && it->subject == s; ++it) out.push_back(it->relation);
  return out;
}

PatternIndex build_pattern_index(std::span<const LabeledExample> examples, std::span<const Split> splits) {
  PatternIndex index;
  for (const auto& ex : examples) {
    if (!ex.formatted) continue;
    if (std::find(splits.begin(), splits.end(), ex.record.split) == splits.end()) continue;
    index.add(ex.formatted->key(), ex.record.relation);
  }
  return index;
}

PlausibleSet plausible_set(const QuestionRecord& record, const FormattedQuestion& formatted, const KnowledgeBase& kb,
                           const AliasTable& aliases, const PatternIndex& index) {
  PlausibleSet out;
  const auto entities = aliases.entities_for_alias(formatted.mention);
  out.candidates.assign(entities.begin(), entities.end());
  const std::vector<RelationId> relations = index.relations(formatted.key());
  for (EntityId s : out.candidates)
    for (RelationId r : relations)
      if (kb.has_fact(s, r)) out.pairs.push_back({s, r});
  out.pairs.push_back({record.subject, record.relation});
  if (!std::binary_search(out.candidates.begin(), out.candidates.end(), record.subject))
    out.candidates.insert(std::lower_bound(out.candidates.begin(), out.candidates.end(), record.subject),
                          record.subject);
  std::sort(out.pairs.begin(), out.pairs.end());
  out.pairs.erase(std::unique(out.pairs.begin(), out.pairs.end()), out.pairs.end());
  return out;
}

std::vector<LabeledExample> format_records(std::vector<QuestionRecord> records, const AliasTable& aliases) {
  std::vector<LabeledExample> out;
  out.reserve(records.size());
  for (auto& r : records) {
    LabeledExample ex;
    ex.formatted = format_question(r, aliases);
    ex.record = std::move(r);
    out.push_back(std::move(ex));
  }
  return out;
}

void relabel(std::vector<LabeledExample>& examples, const KnowledgeBase& kb, const AliasTable& aliases,
             const PatternIndex& index) {
  for (auto& ex : examples) {
    if (ex.formatted)
      ex.positives = plausible_set(ex.record, *ex.formatted, kb, aliases, index);
    else
      ex.positives = PlausibleSet{{ex.gold()}, {ex.record.subject}};
  }
}

double ambiguity_rate(std::span<const LabeledExample> examples) {
  std::size_t formatted = 0, ambiguous = 0;
  for (const auto& ex : examples) {
    if (!ex.formatted) continue;
    ++formatted;
    if (is_ambiguous(ex.positives)) ++ambiguous;
  }
  return formatted == 0 ? 0.0 : static_cast<double>(ambiguous) / static_cast<double>(formatted);
}

std::vector<RelationId> negative_pool(const KnowledgeBase& kb, const PlausibleSet& positives, EntityId s) {
  const std::vector<RelationId> plausible = positives.relations_for(s);
  std::vector<RelationId> out;
  for (RelationId r : kb.subgraph_relations(s))
    if (!std::binary_search(plausible.begin(), plausible.end(), r)) out.push_back(r);
  return out;
}

std::vector<RelationId> sample_negatives(std::span<const RelationId> pool, std::size_t k, Rng& rng) {
  std::vector<RelationId> items(pool.begin(), pool.end());
  const std::size_t n = std::min(k, items.size());
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) std::swap(items[i], items[i + rng.below(items.size() - i)]);
  items.resize(n);
  return items;
}

std::vector<AliasReportRow> alias_report(std::span<const LabeledExample> examples, const KnowledgeBase& kb,
                                         const AliasTable& aliases) {
  const auto type_relation = kb.symbols().relations.find(kNotableTypeRelation);
  std::map<std::string, std::map<std::string, std::size_t>> grouped;
  for (const auto& ex : examples) {
    if (!ex.formatted) continue;
    const std::string alias = ex.formatted->mention_text();
    if (grouped.count(alias)) continue;
    auto& by_type = grouped[alias];
    for (EntityId e : aliases.entities_for_alias(alias)) {
      std::string type = "unknown";
      if (type_relation) {
        const auto types = kb.objects(e, *type_relation);
        if (!types.empty()) {
          // Lexicographically smallest type name keeps the report stable.
          type = kb.name(types.front());
          for (EntityId t : types) type = std::min(type, kb.name(t));
        }
      }
      ++by_type[type];
    }
  }
  std::vector<AliasReportRow> rows;
  for (const auto& [alias, types] : grouped) {
    std::vector<AliasReportRow> block;
    for (const auto& [type, n] : types) block.push_back({alias, type, n});
    std::stable_sort(block.begin(), block.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

std::vector<PatternReportRow> pattern_report(const PatternIndex& index, const Symbols& symbols) {
  std::vector<PatternReportRow> rows;
  for (const auto& [pattern, relations] : index.entries()) {
    std::vector<PatternReportRow> block;
    for (const auto& [r, n] : relations) block.push_back({pattern, symbols.relations.text(r), n});
    std::sort(block.begin(), block.end(), [](const auto& a, const auto& b) {
      return a.count != b.count ? a.count > b.count : a.relation < b.relation;
    });
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

void write_alias_report(std::ostream& out, std::span<const AliasReportRow> rows) {
  out << "alias\ttype\tentities\n";
  for (const auto& r : rows) out << r.alias << '\t' << r.type << '\t' << r.count << '\n';
}

void write_pattern_report(std::ostream& out, std::span<const PatternReportRow> rows) {
  out << "pattern\trelation\tquestions\n";
  for (const auto& r : rows) out << r.pattern << '\t' << r.relation << '\t' << r.count << '\n';
}

}  // namespace ksaqa
