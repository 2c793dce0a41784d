#pragma once

#include "inflight/validators/text.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace inflight {

using text::ArithOp;

/// One symbolic arithmetic statement found in a reasoning trace, e.g.
/// "4 × 60 = 240". Multi-operator chains evaluate left to right.
struct ArithClaim {
  std::vector<Decimal> operands;  // at least two
  std::vector<ArithOp> ops;       // operands.size() - 1
  Decimal claimed_result;
  std::size_t begin = 0;          // byte offsets into the source text
  std::size_t end = 0;

  /// Left-to-right value of the operands; nullopt on division by zero.
  std::optional<Rational> evaluate() const {
    Rational acc = operands.front().value();
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const Rational& rhs = operands[i + 1].value();
      switch (ops[i]) {
        case ArithOp::Add: acc += rhs; break;
        case ArithOp::Sub: acc -= rhs; break;
        case ArithOp::Mul: acc *= rhs; break;
        case ArithOp::Div:
          if (rhs == 0) return std::nullopt;
          acc /= rhs;
          break;
      }
    }
    return acc;
  }

  bool holds(const Rational& tolerance = Rational(0)) const {
    auto v = evaluate();
    if (!v) return false;
    Rational diff = *v - claimed_result.value();
    if (diff < 0) diff = -diff;
    return diff <= tolerance;
  }

  std::string to_string() const {
    std::string s = operands.front().text();
    for (std::size_t i = 0; i < ops.size(); ++i)
      s += std::string(" ") + text::op_symbol(ops[i]) + " " + operands[i + 1].text();
    return s + " = " + claimed_result.text();
  }
};

/// Extracts every "<num> <op> <num> [<op> <num>]* = <num>" span. A claimed
/// result may start the next claim ("4 × 60 = 240 + 12 = 252" yields two).
/// Spans that do not fit the pattern are skipped.
inline std::vector<ArithClaim> parse_arith_claims(std::string_view s) {
  using Kind = text::Token::Kind;
  const auto toks = text::tokenize(s);
  std::vector<ArithClaim> claims;
  std::size_t i = 0;
  while (i < toks.size()) {
    if (toks[i].kind != Kind::Number) {
      ++i;
      continue;
    }
    ArithClaim c;
    c.begin = toks[i].begin;
    c.operands.push_back(toks[i].number);
    std::size_t j = i + 1;
    while (j + 1 < toks.size() && toks[j].kind == Kind::Op && toks[j + 1].kind == Kind::Number) {
      c.ops.push_back(toks[j].op);
      c.operands.push_back(toks[j + 1].number);
      j += 2;
    }
    if (!c.ops.empty() && j + 1 < toks.size() && toks[j].kind == Kind::Equals &&
        toks[j + 1].kind == Kind::Number) {
      c.claimed_result = toks[j + 1].number;
      c.end = toks[j + 1].end;
      claims.push_back(std::move(c));
      i = j + 1;  // the result may open a chained claim
    } else {
      i = std::max(i + 1, j);
    }
  }
  return claims;
}

/// Number that follows each occurrence of `marker` ("#### 468"), nullopt for
/// occurrences not followed by a numeral.
inline std::vector<std::optional<Decimal>> marker_values(std::string_view s, std::string_view marker) {
  std::vector<std::optional<Decimal>> values;
  if (marker.empty()) return values;
  for (std::size_t pos = s.find(marker); pos != std::string_view::npos;
       pos = s.find(marker, pos + marker.size())) {
    std::size_t k = pos + marker.size();
    while (k < s.size() && (s[k] == ' ' || s[k] == '\t')) ++k;
    std::size_t line_end = s.find('\n', k);
    if (line_end == std::string_view::npos) line_end = s.size();
    const auto toks = text::tokenize(s.substr(k, line_end - k));
    if (!toks.empty() && toks.front().kind == text::Token::Kind::Number && toks.front().begin == 0)
      values.push_back(toks.front().number);
    else
      values.push_back(std::nullopt);
  }
  return values;
}

/// The answer after the unique final marker; nullopt when the marker is
/// absent, duplicated, or not followed by a number.
inline std::optional<Decimal> extract_final_answer(std::string_view s, std::string_view marker = "####") {
  auto values = marker_values(s, marker);
  if (values.size() != 1) return std::nullopt;
  return values.front();
}

}  // namespace inflight
