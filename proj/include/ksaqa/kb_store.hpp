#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ksaqa/interner.hpp"
#include "ksaqa/text.hpp"

namespace ksaqa {

// Interned entity and relation names, shared by the knowledge base, the
// alias table and parsed datasets so that equal text means equal id.
struct Symbols {
  EntityInterner entities;
  RelationInterner relations;
};

struct Triple {
  EntityId subject;
  RelationId relation;
  EntityId object;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// Deduplicated triple set with one-hop indexes. Immutable after ingest.
class KnowledgeBase {
 public:
  // One `subject<TAB>relation<TAB>object` per line; the object field may hold
  // several space-separated ids. Blank lines are skipped.
  static KnowledgeBase ingest(std::istream& lines, std::shared_ptr<Symbols> symbols = nullptr);
  static KnowledgeBase from_triples(std::span<const std::array<std::string, 3>> triples,
                                    std::shared_ptr<Symbols> symbols = nullptr);

  // R(e): distinct relations leaving e, ascending by relation text.
  std::span<const RelationId> subgraph_relations(EntityId e) const;
  bool has_fact(EntityId e, RelationId r) const;
  // Objects t with (e, r, t) in the KB, ascending by id.
  std::span<const EntityId> objects(EntityId e, RelationId r) const;

  std::size_t entity_count() const { return entity_count_; }
  std::size_t relation_count() const { return relation_count_; }
  std::size_t triple_count() const { return triples_.size(); }
  const std::vector<Triple>& triples() const { return triples_; }

  const Symbols& symbols() const { return *symbols_; }
  const std::shared_ptr<Symbols>& shared_symbols() const { return symbols_; }
  const std::string& name(EntityId e) const { return symbols_->entities.text(e); }
  const std::string& name(RelationId r) const { return symbols_->relations.text(r); }

 private:
  struct Range {
    std::uint32_t begin;
    std::uint32_t count;
  };
  static std::uint64_t key(EntityId e, RelationId r) { return (std::uint64_t{e.value} << 32) | r.value; }
  void build(std::vector<Triple> triples);

  std::shared_ptr<Symbols> symbols_;
  std::vector<Triple> triples_;
  std::vector<EntityId> objects_;
  std::vector<std::vector<RelationId>> subgraph_;
  std::unordered_map<std::uint64_t, Range> object_index_;
  std::size_t entity_count_ = 0;
  std::size_t relation_count_ = 0;
};

// Normalized alias text -> entities, plus each entity's alias list.
class AliasTable {
 public:
  explicit AliasTable(std::shared_ptr<Symbols> symbols) : symbols_(std::move(symbols)) {}

  // One `entity<TAB>alias text` per line.
  static AliasTable ingest(std::istream& lines, std::shared_ptr<Symbols> symbols);

  void add(EntityId e, std::string_view alias_text);

  // Exact match on normalized text; ascending by id. Empty when unknown.
  std::span<const EntityId> entities_for_alias(std::string_view text) const;
  std::span<const EntityId> entities_for_alias(const Tokens& tokens) const;
  // Normalized aliases of e in ingest order.
  std::span<const std::string> aliases(EntityId e) const;

  std::size_t alias_count() const { return map_.size(); }
  const std::unordered_map<std::string, std::vector<EntityId>>& map() const { return map_; }
  const Symbols& symbols() const { return *symbols_; }

 private:
  std::shared_ptr<Symbols> symbols_;
  std::unordered_map<std::string, std::vector<EntityId>> map_;
  std::unordered_map<EntityId, std::vector<std::string>> reverse_;
};

}  // namespace ksaqa
