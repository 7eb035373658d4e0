#include "entkit/text.hpp"

#include <algorithm>
#include <array>

namespace entkit {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return (u >= '!' && u <= '/') || (u >= ':' && u <= '@') ||
         (u >= '[' && u <= '`') || (u >= '{' && u <= '~');
}

struct FoldPair {
  uint32_t from;
  uint32_t to;
};

#include "casefold_table.inc"

uint32_t fold_codepoint(uint32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  auto* end = kFoldTable + std::size(kFoldTable);
  auto* it = std::lower_bound(kFoldTable, end, cp,
                              [](const FoldPair& p, uint32_t c) { return p.from < c; });
  if (it != end && it->from == cp) return it->to;
  return cp;
}

void append_utf8(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

// Decodes one codepoint starting at i; ill-formed bytes pass through as-is.
uint32_t decode_utf8(std::string_view s, size_t& i) {
  unsigned char c0 = static_cast<unsigned char>(s[i]);
  if (c0 < 0x80) {
    ++i;
    return c0;
  }
  int len = (c0 >= 0xf0) ? 4 : (c0 >= 0xe0) ? 3 : (c0 >= 0xc0) ? 2 : 1;
  if (len == 1 || i + len > s.size()) {
    ++i;
    return c0;
  }
  uint32_t cp = c0 & (0x7f >> len);
  for (int k = 1; k < len; ++k) {
    unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xc0) != 0x80) {
      ++i;
      return c0;
    }
    cp = (cp << 6) | (cc & 0x3f);
  }
  i += len;
  return cp;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  auto emit = [&](size_t a, size_t b) {
    tokens.push_back({std::string(text.substr(a, b - a)), a, b});
  };
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < n && !is_space(text[j])) ++j;
    size_t a = i;
    while (a < j && is_punct(text[a])) {
      emit(a, a + 1);
      ++a;
    }
    size_t b = j;
    while (b > a && is_punct(text[b - 1])) --b;
    if (a < b) emit(a, b);
    for (size_t k = b; k < j; ++k) emit(k, k + 1);
    i = j;
  }
  return tokens;
}

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    uint32_t cp = decode_utf8(text, i);
    append_utf8(out, fold_codepoint(cp));
  }
  return out;
}

std::vector<std::string> folded_token_texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(fold_case(t.text));
  return out;
}

}  // namespace entkit
