#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "ksaqa/error.hpp"
#include "ksaqa/kb_store.hpp"
#include "support/synthetic.hpp"

using namespace ksaqa;

namespace {

KnowledgeBase ingest(const std::string& text, std::shared_ptr<Symbols> symbols = nullptr) {
  std::istringstream in(text);
  return KnowledgeBase::ingest(in, std::move(symbols));
}

}  // namespace

TEST_CASE("ingest_triples counts") {
  auto kb = ingest("a\tr1\tb\na\tr2\tc\nd\tr1\tb\n");
  CHECK(kb.triple_count() == 3);
  CHECK(kb.entity_count() == 4);
  CHECK(kb.relation_count() == 2);

  auto dup = ingest("a\tr\tb\na\tr\tb\n");
  CHECK(dup.triple_count() == 1);

  auto empty = ingest("");
  CHECK(empty.triple_count() == 0);
  CHECK(empty.entity_count() == 0);
}

TEST_CASE("ingest_triples strips url prefixes and splits object lists") {
  auto kb = ingest("www.freebase.com/m/04vthmn\twww.freebase.com/book/written_work/author\twww.freebase.com/m/01 "
                   "www.freebase.com/m/02\n");
  CHECK(kb.triple_count() == 2);
  const auto s = kb.symbols().entities.find("04vthmn");
  const auto r = kb.symbols().relations.find("book/written_work/author");
  REQUIRE(s);
  REQUIRE(r);
  CHECK(kb.objects(*s, *r).size() == 2);
}

TEST_CASE("malformed triple lines report their line number") {
  try {
    ingest("a\tr\tb\n\na\tr\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("subgraph_relations") {
  auto kb = ingest("e\tzeta\tt1\ne\talpha\tt2\ne\tzeta\tt3\n");
  const EntityId e = *kb.symbols().entities.find("e");
  auto rels = kb.subgraph_relations(e);
  REQUIRE(rels.size() == 2);
  CHECK(kb.name(rels[0]) == "alpha");
  CHECK(kb.name(rels[1]) == "zeta");
  CHECK(kb.subgraph_relations(*kb.symbols().entities.find("t1")).empty());
  CHECK(kb.subgraph_relations(EntityId{999}).empty());
  CHECK(kb.has_fact(e, rels[0]));
  const RelationId absent = kb.shared_symbols()->relations.intern("absent");
  CHECK_FALSE(kb.has_fact(e, absent));
}

TEST_CASE("indexes agree with brute-force scans of the triple list") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto raw = synthetic::generate(rng, {});
    auto loaded = synthetic::load(raw);
    const auto& kb = loaded->kb;
    const auto& sym = kb.symbols();

    std::set<std::string> entities, relations;
    std::set<std::array<std::string, 3>> triples;
    for (const auto& t : raw.triples) {
      const std::array<std::string, 3> n{normalize_id(t[0]), normalize_id(t[1]), normalize_id(t[2])};
      triples.insert(n);
      entities.insert(n[0]);
      entities.insert(n[2]);
      relations.insert(n[1]);
    }
    CHECK(kb.triple_count() == triples.size());
    CHECK(kb.entity_count() == entities.size());
    CHECK(kb.relation_count() == relations.size());

    for (const auto& name : entities) {
      const EntityId e = *sym.entities.find(name);
      std::set<std::string> expected;
      for (const auto& t : triples)
        if (t[0] == name) expected.insert(t[1]);
      std::vector<std::string> got;
      for (RelationId r : kb.subgraph_relations(e)) got.push_back(kb.name(r));
      CHECK(got == std::vector<std::string>(expected.begin(), expected.end()));
      CHECK(std::is_sorted(got.begin(), got.end()));
      CHECK(std::adjacent_find(got.begin(), got.end()) == got.end());
      // Deterministic across calls.
      CHECK(std::equal(kb.subgraph_relations(e).begin(), kb.subgraph_relations(e).end(),
                       kb.subgraph_relations(e).begin()));
      for (const auto& rname : relations) {
        const RelationId r = *sym.relations.find(rname);
        CHECK(kb.has_fact(e, r) == !kb.objects(e, r).empty());
        CHECK(kb.has_fact(e, r) == expected.count(rname));
      }
    }
    for (const auto& t : triples) {
      const EntityId s = *sym.entities.find(t[0]);
      const RelationId r = *sym.relations.find(t[1]);
      const EntityId o = *sym.entities.find(t[2]);
      CHECK(kb.has_fact(s, r));
      const auto objs = kb.objects(s, r);
      CHECK(std::find(objs.begin(), objs.end(), o) != objs.end());
    }
  }
}

TEST_CASE("alias table") {
  auto symbols = std::make_shared<Symbols>();
  std::istringstream in("m/1\tMalcolm X\nm/2\tlamb\nm/3\tLamb\n");
  auto table = AliasTable::ingest(in, symbols);
  const EntityId m1 = *symbols->entities.find("m/1");
  CHECK(table.entities_for_alias("malcolm x").size() == 1);
  CHECK(table.entities_for_alias("malcolm x")[0] == m1);
  CHECK(table.entities_for_alias(Tokens{"malcolm", "x"}).size() == 1);
  CHECK(table.entities_for_alias("lamb").size() == 2);
  CHECK(table.entities_for_alias("nobody").empty());
  CHECK(table.aliases(m1).size() == 1);
  CHECK(table.aliases(m1)[0] == "malcolm x");

  std::istringstream empty("");
  CHECK(AliasTable::ingest(empty, symbols).alias_count() == 0);

  std::istringstream bad("m/1\n");
  CHECK_THROWS_AS(AliasTable::ingest(bad, symbols), ParseError);
}

TEST_CASE("normalize") {
  CHECK(normalize("  Who   wrote Malcolm-X?") == "who wrote malcolm - x ?");
  for (const char* s : {"It's  (A) test!", "lamb", "U.S.A.", "  "}) CHECK(normalize(normalize(s)) == normalize(s));
  CHECK(normalize_id("www.freebase.com/m/04vthmn") == "04vthmn");
  CHECK(normalize_id("www.freebase.com/music/recording/artist") == "music/recording/artist");
  CHECK(normalize_id("m/1") == "m/1");
}
