#pragma once

#include "inflight/core/decimal.hpp"

#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace inflight::text {

// ---------------------------------------------------------------------------
// UTF-8
// ---------------------------------------------------------------------------

/// Decodes one code point at `pos` and advances it. Invalid sequences yield
/// nullopt and advance one byte.
inline std::optional<char32_t> next_codepoint(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
  else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
  else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
  else { ++pos; return std::nullopt; }
  if (pos + len > s.size()) { ++pos; return std::nullopt; }
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) { ++pos; return std::nullopt; }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += len;
  return cp;
}

enum class Script { Latin, Cjk, Cyrillic, Arabic, Other };

inline Script script_of(char32_t cp) {
  if ((cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
      (cp >= 0x3000 && cp <= 0x30FF) || (cp >= 0x31F0 && cp <= 0x31FF) ||
      (cp >= 0xAC00 && cp <= 0xD7AF) || (cp >= 0x1100 && cp <= 0x11FF) ||
      (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0xFF00 && cp <= 0xFFEF) ||
      (cp >= 0x20000 && cp <= 0x2FA1F))
    return Script::Cjk;
  if ((cp >= 0x0400 && cp <= 0x052F) || (cp >= 0x1C80 && cp <= 0x1C8F) ||
      (cp >= 0x2DE0 && cp <= 0x2DFF) || (cp >= 0xA640 && cp <= 0xA69F))
    return Script::Cyrillic;
  if ((cp >= 0x0600 && cp <= 0x06FF) || (cp >= 0x0750 && cp <= 0x077F) ||
      (cp >= 0x08A0 && cp <= 0x08FF) || (cp >= 0xFB50 && cp <= 0xFDFF) ||
      (cp >= 0xFE70 && cp <= 0xFEFF))
    return Script::Arabic;
  if (cp < 0x250) return Script::Latin;
  return Script::Other;
}

/// First CJK, Cyrillic or Arabic code point (or invalid byte), if any.
inline std::optional<std::size_t> find_foreign_script(std::string_view s) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t at = pos;
    auto cp = next_codepoint(s, pos);
    if (!cp) return at;
    const auto sc = script_of(*cp);
    if (sc == Script::Cjk || sc == Script::Cyrillic || sc == Script::Arabic) return at;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Words
// ---------------------------------------------------------------------------

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

inline std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) words.push_back(s.substr(start, i - start));
  }
  return words;
}

inline std::size_t word_count(std::string_view s) { return split_words(s).size(); }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Arithmetic tokens
// ---------------------------------------------------------------------------

enum class ArithOp { Add, Sub, Mul, Div };

inline const char* op_symbol(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "\xC3\x97";
    case ArithOp::Div: return "\xC3\xB7";
  }
  return "?";
}

struct Token {
  enum class Kind { Number, Op, Equals, Other } kind = Kind::Other;
  std::size_t begin = 0;
  std::size_t end = 0;
  Decimal number;      // Kind::Number
  ArithOp op{};        // Kind::Op
};

namespace detail {

inline bool starts_with(std::string_view s, std::size_t pos, std::string_view p) {
  return s.substr(pos, p.size()) == p;
}

inline std::size_t currency_len(std::string_view s, std::size_t pos) {
  if (starts_with(s, pos, "$")) return 1;
  if (starts_with(s, pos, "\xC2\xA3")) return 2;
  if (starts_with(s, pos, "\xE2\x82\xAC")) return 3;
  return 0;
}

inline std::size_t minus_len(std::string_view s, std::size_t pos) {
  if (starts_with(s, pos, "-")) return 1;
  if (starts_with(s, pos, "\xE2\x88\x92")) return 3;
  return 0;
}

/// Length of the unsigned numeral (optional currency, digits, thousands
/// groups, fraction) starting at `pos`, or 0.
inline std::size_t numeral_len(std::string_view s, std::size_t pos) {
  std::size_t i = pos + currency_len(s, pos);
  const std::size_t digits_start = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  const std::size_t lead = i - digits_start;
  if (lead == 0) return 0;
  if (lead <= 3) {
    while (i + 3 < s.size() && s[i] == ',' && is_digit(s[i + 1]) && is_digit(s[i + 2]) &&
           is_digit(s[i + 3]) && (i + 4 >= s.size() || !is_digit(s[i + 4])))
      i += 4;
  }
  if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
  }
  return i - pos;
}

}  // namespace detail

/// Splits text into numbers, arithmetic operators, '=' and everything else.
/// A '-' directly before a numeral is a sign unless the previous token is a
/// number; 'x' is a multiplication sign only when it stands between numbers.
inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto prev_is_number = [&] { return !out.empty() && out.back().kind == Token::Kind::Number; };
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    // Signed numeral.
    if (const auto m = detail::minus_len(s, i); m && !prev_is_number()) {
      if (const auto n = detail::numeral_len(s, i + m); n) {
        Token t{Token::Kind::Number, i, i + m + n, {}, {}};
        t.number = *Decimal::parse(s.substr(i, m + n));
        out.push_back(std::move(t));
        i += m + n;
        continue;
      }
    }
    if (const auto n = detail::numeral_len(s, i); n) {
      Token t{Token::Kind::Number, i, i + n, {}, {}};
      t.number = *Decimal::parse(s.substr(i, n));
      out.push_back(std::move(t));
      i += n;
      continue;
    }
    auto push_op = [&](ArithOp op, std::size_t len) {
      Token t{Token::Kind::Op, i, i + len, {}, {}};
      t.op = op;
      out.push_back(t);
      i += len;
    };
    if (s[i] == '+') { push_op(ArithOp::Add, 1); continue; }
    if (s[i] == '*') { push_op(ArithOp::Mul, 1); continue; }
    if (s[i] == '/') { push_op(ArithOp::Div, 1); continue; }
    if (const auto m = detail::minus_len(s, i); m) { push_op(ArithOp::Sub, m); continue; }
    if (detail::starts_with(s, i, "\xC3\x97")) { push_op(ArithOp::Mul, 2); continue; }
    if (detail::starts_with(s, i, "\xC3\xB7")) { push_op(ArithOp::Div, 2); continue; }
    if ((s[i] == 'x' || s[i] == 'X') && prev_is_number() && (i == 0 || !is_alpha(s[i - 1])) &&
        (i + 1 >= s.size() || !is_alpha(s[i + 1]))) {
      std::size_t j = i + 1;
      while (j < s.size() && is_space(s[j])) ++j;
      if (j < s.size() && detail::numeral_len(s, j)) {
        push_op(ArithOp::Mul, 1);
        continue;
      }
    }
    if (s[i] == '=') {
      out.push_back(Token{Token::Kind::Equals, i, i + 1, {}, {}});
      ++i;
      continue;
    }
    // Anything else: one whole non-space run that does not start a numeral.
    const std::size_t start = i;
    std::size_t pos = i;
    next_codepoint(s, pos);
    i = pos;
    while (i < s.size() && !is_space(s[i]) && is_alpha(s[i])) ++i;
    out.push_back(Token{Token::Kind::Other, start, i, {}, {}});
  }
  return out;
}

inline std::vector<Decimal> numbers_in(std::string_view s) {
  std::vector<Decimal> nums;
  for (auto& t : tokenize(s))
    if (t.kind == Token::Kind::Number) nums.push_back(std::move(t.number));
  return nums;
}

}  // namespace inflight::text
