#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ksaqa {

using Tokens = std::vector<std::string>;

// Lowercases ASCII, splits every ASCII punctuation character into its own
// token and collapses whitespace. Idempotent.
Tokens tokenize(std::string_view text);

std::string join(const Tokens& tokens, std::string_view sep = " ");

// tokenize() followed by join(); the canonical key for alias lookup.
std::string normalize(std::string_view text);

// Strips the Freebase URL prefixes ("www.freebase.com/m/", "www.freebase.com/",
// optional scheme, leading "/m/") so dataset ids and KB ids unify.
std::string normalize_id(std::string_view raw);

// Splits on a single character without collapsing empty fields.
std::vector<std::string_view> split(std::string_view line, char sep);

std::string_view trim(std::string_view s);

}  // namespace ksaqa
