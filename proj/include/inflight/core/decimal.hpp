#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace inflight {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Exact decimal number. Keeps the normalized decimal string alongside its
/// rational value so answers compare exactly (no float equality).
class Decimal {
 public:
  Decimal() : text_("0"), value_(0) {}

  /// Parses a complete numeric string. Accepts an optional sign, a leading
  /// currency symbol ($, €, £), comma thousands separators in groups of three
  /// and an optional fractional part. Returns nullopt on anything else.
  static std::optional<Decimal> parse(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    bool negative = false;
    if (consume(s, "-") || consume(s, "\xE2\x88\x92")) negative = true;
    else consume(s, "+");
    consume_currency(s);
    if (!negative && (consume(s, "-") || consume(s, "\xE2\x88\x92"))) negative = true;

    std::string int_digits;
    std::size_t group = 0;
    bool grouped = false;
    std::size_t i = 0;
    while (i < s.size()) {
      const char c = s[i];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        int_digits.push_back(c);
        ++group;
        ++i;
      } else if (c == ',' && !int_digits.empty()) {
        if ((!grouped && group > 3) || (grouped && group != 3)) return std::nullopt;
        grouped = true;
        group = 0;
        ++i;
      } else {
        break;
      }
    }
    if (int_digits.empty()) return std::nullopt;
    if (grouped && group != 3) return std::nullopt;

    std::string frac_digits;
    if (i < s.size() && s[i] == '.') {
      ++i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) frac_digits.push_back(s[i++]);
      if (frac_digits.empty()) return std::nullopt;
    }
    if (i != s.size()) return std::nullopt;
    return from_parts(negative, int_digits, frac_digits);
  }

  static Decimal from_int(long long v) { return *parse(std::to_string(v)); }

  const std::string& text() const noexcept { return text_; }
  const Rational& value() const noexcept { return value_; }
  bool negative() const { return value_ < 0; }
  Rational magnitude() const { return value_ < 0 ? Rational(-value_) : value_; }

  friend bool operator==(const Decimal& a, const Decimal& b) { return a.value_ == b.value_; }
  friend bool operator<(const Decimal& a, const Decimal& b) { return a.value_ < b.value_; }

 private:
  static bool consume(std::string_view& s, std::string_view prefix) {
    if (s.substr(0, prefix.size()) != prefix) return false;
    s.remove_prefix(prefix.size());
    return true;
  }
  static void consume_currency(std::string_view& s) {
    consume(s, "$") || consume(s, "\xE2\x82\xAC") || consume(s, "\xC2\xA3");
  }

  static Decimal from_parts(bool negative, const std::string& int_digits,
                            const std::string& frac_digits) {
    std::size_t first = int_digits.find_first_not_of('0');
    std::string int_norm = first == std::string::npos ? "0" : int_digits.substr(first);
    // cpp_int reads a leading 0 as octal.
    std::string all = int_norm + frac_digits;
    const auto nz = all.find_first_not_of('0');
    BigInt numerator(nz == std::string::npos ? "0" : all.substr(nz));
    BigInt denominator = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(frac_digits.size()));
    Decimal d;
    d.value_ = Rational(numerator, denominator);
    if (negative) d.value_ = -d.value_;
    d.text_ = (d.value_ < 0 ? "-" : "") + int_norm;
    if (!frac_digits.empty()) d.text_ += "." + frac_digits;
    return d;
  }

  std::string text_;
  Rational value_;
};

/// Renders a rational exactly: "p" for integers, terminating decimals in
/// decimal form, "p/q" otherwise.
inline std::string rational_to_string(const Rational& r) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  BigInt den = denominator(r);
  if (den == 1) return numerator(r).str();
  BigInt d = den;
  unsigned twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) return numerator(r).str() + "/" + den.str();
  const unsigned digits = std::max(twos, fives);
  BigInt scaled = numerator(r) * boost::multiprecision::pow(BigInt(10), digits) / den;
  const bool neg = scaled < 0;
  std::string s = (neg ? BigInt(-scaled) : scaled).str();
  if (s.size() <= digits) s.insert(0, digits + 1 - s.size(), '0');
  s.insert(s.size() - digits, ".");
  return (neg ? "-" : "") + s;
}

}  // namespace inflight
