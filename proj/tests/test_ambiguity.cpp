#include <doctest.h>

#include <set>
#include <sstream>

#include "ksaqa/ambiguity.hpp"
#include "ksaqa/relabel_io.hpp"
#include "support/synthetic.hpp"

using namespace ksaqa;

namespace {

// "who wrote malcolm x" fixture: a book and a music record share the alias;
// the pattern is attested with two relations.
struct MalcolmFixture {
  std::shared_ptr<Symbols> sym = std::make_shared<Symbols>();
  KnowledgeBase kb;
  AliasTable aliases{sym};
  std::vector<LabeledExample> examples;
  PatternIndex index;

  MalcolmFixture() {
    std::istringstream kb_in(
        "book1\tbook/book_edition/author_editor\tauthor1\n"
        "book1\tcommon/topic/notable_types\tbook_type\n"
        "rec1\tmusic/recording/artist\tartist1\n"
        "rec1\tmusic/composition/composer\tcomposer1\n"
        "rec1\tmusic/recording/length\tlen1\n"
        "rec1\tcommon/topic/notable_types\trecord_type\n"
        "film1\tfilm/film/director\tdir1\n"
        "film1\tcommon/topic/notable_types\tfilm_type\n"
        "other\tbook/book_edition/author_editor\tauthor2\n"
        "other\tmusic/composition/composer\tcomposer2\n"
        "other\tmusic/recording/artist\tartist2\n");
    kb = KnowledgeBase::ingest(kb_in, sym);
    std::istringstream alias_in(
        "book1\tmalcolm x\nrec1\tmalcolm x\nfilm1\tmalcolm x\nother\tanother song\n");
    aliases = AliasTable::ingest(alias_in, sym);
    std::istringstream q_in(
        "book1\tbook/book_edition/author_editor\tauthor1\twho wrote malcolm x\n"
        "other\tmusic/composition/composer\tcomposer2\twho wrote another song\n"
        "other\tmusic/recording/artist\tartist2\twho wrote another song\n");
    examples = format_records(parse_simplequestions(q_in, Split::train, *sym), aliases);
    const Split train[] = {Split::train};
    index = build_pattern_index(examples, train);
    relabel(examples, kb, aliases, index);
  }

  EntityId e(const char* n) const { return *sym->entities.find(n); }
  RelationId r(const char* n) const { return *sym->relations.find(n); }
};

}  // namespace

TEST_CASE("pattern index aggregates relations per formatted question") {
  MalcolmFixture f;
  const auto rels = f.index.relations("who wrote <e>");
  CHECK(rels.size() == 3);
  CHECK(f.index.relations("unseen <e>").empty());
}

TEST_CASE("plausible set on the malcolm x fixture") {
  MalcolmFixture f;
  const auto& ex = f.examples[0];
  REQUIRE(ex.formatted);
  CHECK(ex.positives.candidates.size() == 3);
  const std::set<InterpretationPair> expected = {
      {f.e("book1"), f.r("book/book_edition/author_editor")},
      {f.e("rec1"), f.r("music/recording/artist")},
      {f.e("rec1"), f.r("music/composition/composer")},
  };
  CHECK(std::set<InterpretationPair>(ex.positives.pairs.begin(), ex.positives.pairs.end()) == expected);
  CHECK(is_ambiguous(ex.positives));

  // Both "wrote" relations of the record are plausible, so neither is a negative.
  const auto pool = negative_pool(f.kb, ex.positives, f.e("rec1"));
  REQUIRE(pool.size() == 2);
  CHECK(f.kb.name(pool[0]) == "common/topic/notable_types");
  CHECK(f.kb.name(pool[1]) == "music/recording/length");
  CHECK(negative_pool(f.kb, ex.positives, f.e("film1")).size() == 2);
}

TEST_CASE("unknown pattern yields only the gold pair") {
  MalcolmFixture f;
  QuestionRecord r = f.examples[0].record;
  auto formatted = format_span(r.tokens, 2, 4);
  formatted.tokens[0] = "whom";
  PatternIndex empty;
  const auto set = plausible_set(r, formatted, f.kb, f.aliases, empty);
  CHECK(set.pairs == std::vector<InterpretationPair>{f.examples[0].gold()});
  CHECK_FALSE(is_ambiguous(set));
}

TEST_CASE("full cross product when every fact is present") {
  auto sym = std::make_shared<Symbols>();
  std::istringstream kb_in("s1\tr1\to\ns1\tr2\to\ns2\tr1\to\ns2\tr2\to\n");
  auto kb = KnowledgeBase::ingest(kb_in, sym);
  std::istringstream al("s1\tamb\ns2\tamb\n");
  auto aliases = AliasTable::ingest(al, sym);
  std::istringstream q_in("s1\tr1\to\twhat is amb\ns2\tr2\to\twhat is amb\n");
  auto ex = format_records(parse_simplequestions(q_in, Split::train, *sym), aliases);
  const Split train[] = {Split::train};
  relabel(ex, kb, aliases, build_pattern_index(ex, train));
  CHECK(ex[0].positives.pairs.size() == 4);
  CHECK(ex[0].positives.candidates.size() == 2);
}

TEST_CASE("negative pool set difference and sampling") {
  auto sym = std::make_shared<Symbols>();
  std::istringstream kb_in("s\tr1\to\ns\tr2\to\ns\tr3\to\n");
  auto kb = KnowledgeBase::ingest(kb_in, sym);
  const EntityId s = *sym->entities.find("s");
  PlausibleSet only_r1{{{s, *sym->relations.find("r1")}}, {s}};
  const auto pool = negative_pool(kb, only_r1, s);
  REQUIRE(pool.size() == 2);
  CHECK(kb.name(pool[0]) == "r2");
  CHECK(kb.name(pool[1]) == "r3");

  PlausibleSet all;
  for (RelationId r : kb.subgraph_relations(s)) all.pairs.push_back({s, r});
  std::sort(all.pairs.begin(), all.pairs.end());
  CHECK(negative_pool(kb, all, s).empty());

  std::vector<RelationId> ten;
  for (std::uint32_t i = 0; i < 10; ++i) ten.push_back(RelationId{i});
  Rng a(9), b(9);
  const auto draw = sample_negatives(ten, 5, a);
  CHECK(draw.size() == 5);
  CHECK(std::set<RelationId>(draw.begin(), draw.end()).size() == 5);
  CHECK(draw == sample_negatives(ten, 5, b));

  const std::vector<RelationId> two = {RelationId{1}, RelationId{2}};
  Rng c(1);
  const auto capped = sample_negatives(two, 5, c);
  CHECK(std::set<RelationId>(capped.begin(), capped.end()) == std::set<RelationId>(two.begin(), two.end()));
  CHECK(sample_negatives(two, 0, c).empty());
}

TEST_CASE("engineered corpus: exactly the constructed ambiguous questions are flagged") {
  // Ten questions over ten subjects with distinct aliases and patterns.
  // Questions 2, 5 and 7 get a second interpretation by construction.
  std::string triples, alias_lines, questions;
  for (int i = 0; i < 10; ++i) {
    const std::string s = "s" + std::to_string(i);
    triples += s + "\tp" + std::to_string(i) + "\to\n";
    alias_lines += s + "\tname" + std::to_string(i) + "\n";
    questions += s + "\tp" + std::to_string(i) + "\to\tpattern" + std::to_string(i) + " name" + std::to_string(i) + "\n";
  }
  // Entity-level: a second entity under alias name2 with the same relation.
  triples += "twin2\tp2\to\n";
  alias_lines += "twin2\tname2\n";
  // Relation-level: pattern5 also labeled q5 elsewhere, and s5 has q5.
  triples += "s5\tq5\to\nextra\tq5\to\n";
  alias_lines += "extra\tsomeone\n";
  questions += "extra\tq5\to\tpattern5 someone\n";
  // Both: pattern7 labeled r7b for x7, and twin7 (alias name7) has r7b.
  triples += "x7\tr7b\to\ntwin7\tr7b\to\n";
  alias_lines += "x7\tzed\ntwin7\tname7\n";
  questions += "x7\tr7b\to\tpattern7 zed\n";

  auto sym = std::make_shared<Symbols>();
  std::istringstream kb_in(triples), al_in(alias_lines), q_in(questions);
  auto kb = KnowledgeBase::ingest(kb_in, sym);
  auto aliases = AliasTable::ingest(al_in, sym);
  auto ex = format_records(parse_simplequestions(q_in, Split::train, *sym), aliases);
  const Split train[] = {Split::train};
  relabel(ex, kb, aliases, build_pattern_index(ex, train));

  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < 10; ++i)
    if (is_ambiguous(ex[i].positives)) flagged.push_back(i);
  CHECK(flagged == std::vector<std::size_t>{2, 5, 7});
  CHECK(ambiguity_rate(std::span(ex).first(10)) == doctest::Approx(0.3));
  CHECK(ambiguity_rate(std::span(ex).subspan(10)) == 0.0);
}

TEST_CASE("relabeler matches brute-force enumeration on random instances") {
  Rng rng(123);
  for (int trial = 0; trial < 5; ++trial) {
    const auto raw = synthetic::generate(rng, {});
    auto loaded = synthetic::load(raw);
    const auto formats = synthetic::oracle_formats(raw);
    for (std::size_t i = 0; i < raw.questions.size(); ++i) {
      const auto& ex = loaded->examples[i];
      CHECK(ex.formatted.has_value() == formats[i].ok);
      if (!ex.formatted) continue;
      CHECK(ex.formatted->key() == formats[i].pattern);
      const auto expected = synthetic::oracle_plausible(raw, formats, i);
      CHECK(synthetic::to_strings(ex.positives, *loaded->symbols) == expected);
      CHECK(ex.positives.contains(ex.gold()));
      for (const auto& p : ex.positives.pairs) {
        const auto cands = loaded->aliases.entities_for_alias(ex.formatted->mention);
        if (p != ex.gold()) {
          CHECK(loaded->kb.has_fact(p.subject, p.relation));
          CHECK(std::find(cands.begin(), cands.end(), p.subject) != cands.end());
        }
      }
      for (EntityId s : ex.positives.candidates) {
        const auto pool = negative_pool(loaded->kb, ex.positives, s);
        std::vector<std::string> got;
        for (RelationId r : pool) got.push_back(loaded->kb.name(r));
        CHECK(got == synthetic::oracle_negative_pool(raw, expected, loaded->symbols->entities.text(s)));
        for (RelationId r : pool) CHECK_FALSE(ex.positives.contains({s, r}));
      }
    }
  }
}

TEST_CASE("adding a record never shrinks plausible sets sharing its pattern") {
  Rng rng(99);
  const auto raw = synthetic::generate(rng, {});
  auto loaded = synthetic::load(raw);
  PatternIndex grown = loaded->index;
  for (const auto& ex : loaded->examples) {
    if (!ex.formatted) continue;
    grown.add(ex.formatted->key(), RelationId{static_cast<std::uint32_t>(rng.below(loaded->symbols->relations.size()))});
    break;
  }
  for (const auto& ex : loaded->examples) {
    if (!ex.formatted) continue;
    const auto before = ex.positives.pairs;
    const auto after = plausible_set(ex.record, *ex.formatted, loaded->kb, loaded->aliases, grown).pairs;
    CHECK(std::includes(after.begin(), after.end(), before.begin(), before.end()));
  }
}

TEST_CASE("ambiguity report tables") {
  MalcolmFixture f;
  const auto rows = alias_report(f.examples, f.kb, f.aliases);
  std::size_t malcolm_rows = 0;
  for (const auto& r : rows)
    if (r.alias == "malcolm x") ++malcolm_rows;
  CHECK(malcolm_rows == 3);

  PatternIndex index;
  for (int i = 0; i < 5; ++i) index.add("what is <e>", RelationId{0});
  index.add("what is <e>", RelationId{1});
  Symbols sym;
  sym.relations.intern("r1");
  sym.relations.intern("r2");
  const auto prow = pattern_report(index, sym);
  REQUIRE(prow.size() == 2);
  CHECK(prow[0].relation == "r1");
  CHECK(prow[0].count == 5);
  CHECK(prow[1].relation == "r2");
  CHECK(prow[1].count == 1);

  std::ostringstream out;
  write_pattern_report(out, prow);
  CHECK(out.str() == "pattern\trelation\tquestions\nwhat is <e>\tr1\t5\nwhat is <e>\tr2\t1\n");
}

TEST_CASE("relabeled JSON Lines round trip") {
  MalcolmFixture f;
  std::ostringstream out;
  write_relabeled(out, f.examples, *f.sym);
  const std::string first_line = out.str().substr(0, out.str().find('\n'));
  CHECK(first_line.rfind("{\"question\":\"who wrote malcolm x\",\"formatted\":\"who wrote <e>\",\"mention\":\"malcolm x\"", 0) == 0);
  CHECK(first_line.find("\"ambiguous\":true") != std::string::npos);

  Symbols fresh;
  std::istringstream in(out.str());
  auto back = read_relabeled(in, fresh);
  REQUIRE(back.size() == f.examples.size());
  std::ostringstream again;
  write_relabeled(again, back, fresh);
  CHECK(again.str() == out.str());
}
