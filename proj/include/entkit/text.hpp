#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace entkit {

// One token with its byte range in the original string. text is always the
// exact substring [char_start, char_end) of the source.
struct Token {
  std::string text;
  size_t char_start = 0;
  size_t char_end = 0;

  bool operator==(const Token&) const = default;
};

// Splits on whitespace and detaches leading/trailing ASCII punctuation as
// separate tokens. Interior punctuation stays put ("Peter's" is one token).
// Pure and deterministic; empty input yields an empty list.
std::vector<Token> tokenize(std::string_view text);

// Lowercases a UTF-8 string codepoint by codepoint (one-to-one mappings
// only). Used for every case-insensitive comparison in the toolkit; span
// offsets always reference the original text.
std::string fold_case(std::string_view text);

// fold_case applied to each token's text.
std::vector<std::string> folded_token_texts(const std::vector<Token>& tokens);

}  // namespace entkit
