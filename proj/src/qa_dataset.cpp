#include "ksaqa/qa_dataset.hpp"

#include <algorithm>
#include <map>

#include "ksaqa/error.hpp"

namespace ksaqa {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::valid:
      return "valid";
    case Split::test:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "valid") return Split::valid;
  if (text == "test") return Split::test;
  throw ConfigError("unknown split: " + std::string(text));
}

std::vector<QuestionRecord> parse_simplequestions(std::istream& lines, Split which, Symbols& symbols) {
  std::vector<QuestionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 4)
      throw ParseError(line_no, "expected 4 tab-separated fields, found " + std::to_string(fields.size()));
    QuestionRecord r;
    const std::string subject = normalize_id(fields[0]);
    const std::string relation = normalize_id(fields[1]);
    const std::string object = normalize_id(fields[2]);
    if (subject.empty() || relation.empty() || object.empty()) throw ParseError(line_no, "empty id field");
    r.text = std::string(trim(fields[3]));
    r.tokens = tokenize(r.text);
    if (r.tokens.empty()) throw ParseError(line_no, "empty question");
    r.subject = symbols.entities.intern(subject);
    r.relation = symbols.relations.intern(relation);
    r.object = symbols.entities.intern(object);
    r.split = which;
    out.push_back(std::move(r));
  }
  return out;
}

FormattedQuestion format_span(const Tokens& tokens, std::size_t begin, std::size_t end) {
  if (begin >= end || end > tokens.size()) throw DataError("invalid mention span");
  FormattedQuestion f;
  f.mention_begin = begin;
  f.mention_end = end;
  f.tokens.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(begin));
  f.tokens.emplace_back(kEntityToken);
  f.tokens.insert(f.tokens.end(), tokens.begin() + static_cast<std::ptrdiff_t>(end), tokens.end());
  f.mention.assign(tokens.begin() + static_cast<std::ptrdiff_t>(begin), tokens.begin() + static_cast<std::ptrdiff_t>(end));
  return f;
}

Tokens splice(const FormattedQuestion& formatted) {
  Tokens out;
  for (const auto& tok : formatted.tokens) {
    if (tok == kEntityToken)
      out.insert(out.end(), formatted.mention.begin(), formatted.mention.end());
    else
      out.push_back(tok);
  }
  return out;
}

std::optional<FormattedQuestion> format_question(const QuestionRecord& record, const AliasTable& aliases) {
  const Tokens& q = record.tokens;
  std::size_t best_begin = 0, best_len = 0;
  for (const std::string& alias : aliases.aliases(record.subject)) {
    const Tokens a = tokenize(alias);
    if (a.empty() || a.size() > q.size()) continue;
    for (std::size_t i = 0; i + a.size() <= q.size(); ++i) {
      if (!std::equal(a.begin(), a.end(), q.begin() + static_cast<std::ptrdiff_t>(i))) continue;
      if (a.size() > best_len || (a.size() == best_len && i < best_begin)) {
        best_len = a.size();
        best_begin = i;
      }
      break;  // later occurrences of the same alias are never preferred
    }
  }
  if (best_len == 0) return std::nullopt;
  return format_span(q, best_begin, best_begin + best_len);
}

void write_formatted_tsv(std::ostream& out, const QuestionRecord& record, const FormattedQuestion& formatted,
                         const Symbols& symbols) {
  out << record.text << '\t' << formatted.key() << '\t' << symbols.entities.text(record.subject) << '\t'
      << symbols.relations.text(record.relation) << '\n';
}

Vocabulary::Vocabulary() {
  push(std::string(kPadToken));
  push(std::string(kUnkToken));
  push(std::string(kEntityToken));
  push(std::string(kStartToken));
}

void Vocabulary::push(std::string token) {
  if (index_.count(token)) return;
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<Tokens>& corpus, std::size_t min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& tokens : corpus)
    for (const auto& t : tokens) ++counts[t];
  Vocabulary v;
  for (const auto& [token, n] : counts)
    if (n >= min_count) v.push(token);
  return v;
}

Vocabulary Vocabulary::read(std::istream& in) {
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (line_no < 4 && line != v.tokens_[line_no])
      throw ParseError(line_no + 1, "vocabulary must start with the reserved tokens");
    if (line_no >= 4) {
      if (v.index_.count(line)) throw ParseError(line_no + 1, "duplicate vocabulary entry " + line);
      v.push(line);
    }
    ++line_no;
  }
  return v;
}

void Vocabulary::write(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

std::size_t Vocabulary::index(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::indices(const Tokens& tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

bool Vocabulary::contains(std::string_view token) const { return index_.find(token) != index_.end(); }

}  // namespace ksaqa
