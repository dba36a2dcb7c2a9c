#include "ksaqa/relabel_io.hpp"

#include <json.hpp>

#include "ksaqa/error.hpp"

namespace ksaqa {

using json = nlohmann::ordered_json;

void write_relabeled(std::ostream& out, std::span<const LabeledExample> examples, const Symbols& symbols) {
  for (const auto& ex : examples) {
    json j;
    j["question"] = ex.record.text;
    if (ex.formatted) {
      j["formatted"] = ex.formatted->key();
      j["mention"] = ex.formatted->mention_text();
    } else {
      j["formatted"] = nullptr;
      j["mention"] = nullptr;
    }
    json candidates = json::array();
    for (EntityId e : ex.positives.candidates) candidates.push_back(symbols.entities.text(e));
    j["candidates"] = std::move(candidates);
    json positives = json::array();
    for (const auto& p : ex.positives.pairs)
      positives.push_back({symbols.entities.text(p.subject), symbols.relations.text(p.relation)});
    j["positives"] = std::move(positives);
    j["ambiguous"] = ex.formatted && is_ambiguous(ex.positives);
    j["subject"] = symbols.entities.text(ex.record.subject);
    j["relation"] = symbols.relations.text(ex.record.relation);
    j["object"] = symbols.entities.text(ex.record.object);
    j["split"] = std::string(to_string(ex.record.split));
    if (ex.formatted) j["mention_span"] = {ex.formatted->mention_begin, ex.formatted->mention_end};
    out << j.dump() << '\n';
  }
}

std::vector<LabeledExample> read_relabeled(std::istream& in, Symbols& symbols) {
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      LabeledExample ex;
      ex.record.text = j.at("question").get<std::string>();
      ex.record.tokens = tokenize(ex.record.text);
      ex.record.subject = symbols.entities.intern(j.at("subject").get<std::string>());
      ex.record.relation = symbols.relations.intern(j.at("relation").get<std::string>());
      ex.record.object = symbols.entities.intern(j.at("object").get<std::string>());
      ex.record.split = parse_split(j.at("split").get<std::string>());
      if (!j.at("formatted").is_null()) {
        const auto span = j.at("mention_span");
        ex.formatted = format_span(ex.record.tokens, span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>());
        if (ex.formatted->key() != j.at("formatted").get<std::string>())
          throw ParseError(line_no, "formatted question does not match mention_span");
      }
      for (const auto& c : j.at("candidates")) ex.positives.candidates.push_back(symbols.entities.intern(c.get<std::string>()));
      for (const auto& p : j.at("positives"))
        ex.positives.pairs.push_back(
            {symbols.entities.intern(p.at(0).get<std::string>()), symbols.relations.intern(p.at(1).get<std::string>())});
      std::sort(ex.positives.candidates.begin(), ex.positives.candidates.end());
      std::sort(ex.positives.pairs.begin(), ex.positives.pairs.end());
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad relabeled record: ") + e.what());
    }
  }
  return out;
}

}  // namespace ksaqa
