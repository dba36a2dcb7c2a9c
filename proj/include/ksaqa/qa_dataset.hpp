#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ksaqa/kb_store.hpp"
#include "ksaqa/text.hpp"

namespace ksaqa {

enum class Split { train, valid, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct QuestionRecord {
  std::string text;
  Tokens tokens;
  EntityId subject;
  RelationId relation;
  EntityId object;
  Split split = Split::train;
};

// `subject<TAB>relation<TAB>object<TAB>question` per line; blank lines skipped.
std::vector<QuestionRecord> parse_simplequestions(std::istream& lines, Split split, Symbols& symbols);

inline constexpr std::string_view kEntityToken = "<e>";

// Question with the subject mention replaced by a single kEntityToken.
struct FormattedQuestion {
  Tokens tokens;
  std::size_t mention_begin = 0;  // [begin, end) in the original tokens
  std::size_t mention_end = 0;
  Tokens mention;

  std::string mention_text() const { return join(mention); }
  // Pattern key: the formatted tokens joined by spaces.
  std::string key() const { return join(tokens); }
};

// Replaces original tokens [begin, end) by the placeholder.
FormattedQuestion format_span(const Tokens& tokens, std::size_t begin, std::size_t end);

// Inverse of format_span: puts the mention back at the placeholder.
Tokens splice(const FormattedQuestion& formatted);

// Among the subject's aliases occurring as a contiguous token run of the
// question, replaces the longest (leftmost on ties). nullopt means no alias
// of the subject occurs in the question.
std::optional<FormattedQuestion> format_question(const QuestionRecord& record, const AliasTable& aliases);

// question<TAB>formatted<TAB>subject<TAB>relation
void write_formatted_tsv(std::ostream& out, const QuestionRecord& record, const FormattedQuestion& formatted,
                         const Symbols& symbols);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kEntity = 2;
  static constexpr std::size_t kStart = 3;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kStartToken = "<_start>";

  Vocabulary();

  // Tokens seen at least min_count times are kept, in lexicographic order
  // after the reserved entries; the rest map to <unk>.
  static Vocabulary build(const std::vector<Tokens>& corpus, std::size_t min_count = 1);
  // One token per line; line number is the index. Reserved entries first.
  static Vocabulary read(std::istream& in);
  void write(std::ostream& out) const;

  std::size_t index(std::string_view token) const;
  std::vector<std::size_t> indices(const Tokens& tokens) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

 private:
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
};

}  // namespace ksaqa
