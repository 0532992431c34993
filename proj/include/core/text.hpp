#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace core::text {

// Byte range [begin, end) of one whitespace token inside its source string.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

bool is_space(char c);
bool is_punct(char c);

// Maximal runs of non-whitespace bytes. Whitespace is ASCII only, so UTF-8
// multibyte sequences are never split.
std::vector<TokenSpan> token_spans(std::string_view s);
std::vector<std::string_view> tokenize(std::string_view s);
std::size_t count_tokens(std::string_view s);

std::string to_lower(std::string_view s);

// Lowercased token with leading/trailing ASCII punctuation removed. May be
// empty for tokens such as "||" or ",".
std::string term_key(std::string_view token);

// Non-empty term keys of every token in `s`, in order. Shared by BM25 and the
// reference question-generation scorer.
std::vector<std::string> terms(std::string_view s);

std::string join(const std::vector<std::string_view>& parts, std::string_view sep);

// Text up to and including the first '.', '!' or '?' that is followed by
// whitespace or the end of the string; the whole text if none.
std::string_view first_sentence(std::string_view s);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace core::text
