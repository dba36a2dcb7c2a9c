#include "ksaqa/kb_store.hpp"

#include <algorithm>
#include <array>

#include "ksaqa/error.hpp"

namespace ksaqa {

KnowledgeBase KnowledgeBase::ingest(std::istream& lines, std::shared_ptr<Symbols> symbols) {
  KnowledgeBase kb;
  kb.symbols_ = symbols ? std::move(symbols) : std::make_shared<Symbols>();
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3)
      throw ParseError(line_no, "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    const std::string subject = normalize_id(fields[0]);
    const std::string relation = normalize_id(fields[1]);
    if (subject.empty() || relation.empty()) throw ParseError(line_no, "empty subject or relation");
    const EntityId s = kb.symbols_->entities.intern(subject);
    const RelationId r = kb.symbols_->relations.intern(relation);
    bool any_object = false;
    for (std::string_view raw : split(trim(fields[2]), ' ')) {
      const std::string object = normalize_id(raw);
      if (object.empty()) continue;
      triples.push_back({s, r, kb.symbols_->entities.intern(object)});
      any_object = true;
    }
    if (!any_object) throw ParseError(line_no, "empty object field");
  }
  kb.build(std::move(triples));
  return kb;
}

KnowledgeBase KnowledgeBase::from_triples(std::span<const std::array<std::string, 3>> triples,
                                          std::shared_ptr<Symbols> symbols) {
  KnowledgeBase kb;
  kb.symbols_ = symbols ? std::move(symbols) : std::make_shared<Symbols>();
  std::vector<Triple> out;
  for (const auto& [s, r, o] : triples)
    out.push_back({kb.symbols_->entities.intern(normalize_id(s)), kb.symbols_->relations.intern(normalize_id(r)),
                   kb.symbols_->entities.intern(normalize_id(o))});
  kb.build(std::move(out));
  return kb;
}

void KnowledgeBase::build(std::vector<Triple> triples) {
  std::sort(triples.begin(), triples.end());
  triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
  triples_ = std::move(triples);

  std::vector<bool> seen_entity(symbols_->entities.size(), false);
  std::vector<bool> seen_relation(symbols_->relations.size(), false);
  subgraph_.assign(symbols_->entities.size(), {});
  objects_.resize(triples_.size());
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    const Triple& t = triples_[i];
    seen_entity[t.subject.value] = seen_entity[t.object.value] = true;
    seen_relation[t.relation.value] = true;
    objects_[i] = t.object;
    auto [it, inserted] = object_index_.try_emplace(key(t.subject, t.relation), Range{static_cast<std::uint32_t>(i), 0});
    ++it->second.count;
    if (inserted) subgraph_[t.subject.value].push_back(t.relation);
  }
  const auto& rel = symbols_->relations;
  for (auto& list : subgraph_)
    std::sort(list.begin(), list.end(), [&](RelationId a, RelationId b) { return rel.text(a) < rel.text(b); });
  entity_count_ = static_cast<std::size_t>(std::count(seen_entity.begin(), seen_entity.end(), true));
  relation_count_ = static_cast<std::size_t>(std::count(seen_relation.begin(), seen_relation.end(), true));
}

std::span<const RelationId> KnowledgeBase::subgraph_relations(EntityId e) const {
  if (e.value >= subgraph_.size()) return {};
  return subgraph_[e.value];
}

bool KnowledgeBase::has_fact(EntityId e, RelationId r) const { return object_index_.count(key(e, r)) > 0; }

std::span<const EntityId> KnowledgeBase::objects(EntityId e, RelationId r) const {
  auto it = object_index_.find(key(e, r));
  if (it == object_index_.end()) return {};
  return std::span<const EntityId>(objects_).subspan(it->second.begin, it->second.count);
}

AliasTable AliasTable::ingest(std::istream& lines, std::shared_ptr<Symbols> symbols) {
  AliasTable table(std::move(symbols));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2)
      throw ParseError(line_no, "expected entity<TAB>alias, found " + std::to_string(fields.size()) + " fields");
    const std::string id = normalize_id(fields[0]);
    if (id.empty()) throw ParseError(line_no, "empty entity id");
    if (normalize(fields[1]).empty()) throw ParseError(line_no, "empty alias");
    table.add(table.symbols_->entities.intern(id), fields[1]);
  }
  return table;
}

void AliasTable::add(EntityId e, std::string_view alias_text) {
  std::string key = normalize(alias_text);
  if (key.empty()) return;
  auto& entities = map_[key];
  if (auto it = std::lower_bound(entities.begin(), entities.end(), e); it == entities.end() || *it != e)
    entities.insert(it, e);
  auto& names = reverse_[e];
  if (std::find(names.begin(), names.end(), key) == names.end()) names.push_back(std::move(key));
}

std::span<const EntityId> AliasTable::entities_for_alias(std::string_view text) const {
  auto it = map_.find(normalize(text));
  if (it == map_.end()) return {};
  return it->second;
}

std::span<const EntityId> AliasTable::entities_for_alias(const Tokens& tokens) const {
  return entities_for_alias(join(tokens));
}

std::span<const std::string> AliasTable::aliases(EntityId e) const {
  auto it = reverse_.find(e);
  if (it == reverse_.end()) return {};
  return it->second;
}

}  // namespace ksaqa
