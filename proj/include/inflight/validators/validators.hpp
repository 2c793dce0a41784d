#pragma once

#include "inflight/core/types.hpp"
#include "inflight/validators/arith.hpp"
#include "inflight/validators/rules.hpp"
#include "inflight/validators/text.hpp"

#include <algorithm>
#include <string>
#include <string_view>

namespace inflight {

namespace detail {

inline std::string normalize_for_lexicon(std::string_view s) {
  std::string out = text::to_lower_ascii(s);
  // Typographic apostrophe.
  for (std::size_t p = out.find("\xE2\x80\x99"); p != std::string::npos; p = out.find("\xE2\x80\x99", p))
    out.replace(p, 3, "'");
  return out;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool is_terminal(char c) { return c == '.' || c == '?' || c == '!'; }

inline constexpr std::array<std::string_view, 22> kDanglingWords{
    "and", "or", "but", "the", "a", "an", "of", "to", "with", "for", "in",
    "on", "at", "by", "is", "are", "was", "were", "if", "then", "than", "from"};

inline std::string_view last_word(std::string_view s) {
  auto words = text::split_words(s);
  if (words.empty()) return {};
  auto w = words.back();
  while (!w.empty() && !text::is_alpha(w.back()) && !text::is_digit(w.back())) w.remove_suffix(1);
  return w;
}

inline std::string rational_cap_detail(const char* what, const Decimal& v, const Rational& cap) {
  return std::string(what) + ": " + v.text() + " exceeds " + rational_to_string(cap);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// S1: well-posedness of the generated problem
// ---------------------------------------------------------------------------

inline ValidationReport wpe_validate(std::string_view problem, const RuleConfig& cfg = {}) {
  ValidationReport r;
  r.stage = Stage::Problem;
  const auto trimmed = text::trim(problem);

  r.add(std::string(rule::kQuestionMark), trimmed.find('?') != std::string_view::npos,
        "problem must pose a question");

  const auto foreign = text::find_foreign_script(problem);
  r.add(std::string(rule::kEnglishOnly), !foreign,
        foreign ? "non-English script at byte " + std::to_string(*foreign) : "");

  const auto words = text::word_count(problem);
  r.add(std::string(rule::kWordCount),
        words >= static_cast<std::size_t>(cfg.caps.word_min) &&
            words <= static_cast<std::size_t>(cfg.caps.word_max),
        std::to_string(words) + " words");

  {
    bool cut = trimmed.empty() || detail::ends_with(trimmed, "...") ||
               detail::ends_with(trimmed, "\xE2\x80\xA6");
    if (!cut) {
      const char last = trimmed.back();
      const bool closed = detail::is_terminal(last) ||
                          ((last == '"' || last == ')' || last == '\'') && trimmed.size() > 1 &&
                           detail::is_terminal(trimmed[trimmed.size() - 2]));
      if (!closed) cut = true;
    }
    if (!cut) {
      const auto w = text::to_lower_ascii(detail::last_word(trimmed));
      cut = std::find(detail::kDanglingWords.begin(), detail::kDanglingWords.end(), w) !=
            detail::kDanglingWords.end();
    }
    r.add(std::string(rule::kCutoffSuffix), !cut, cut ? "text looks truncated" : "");
  }

  {
    bool repeated = false;
    for (std::size_t i = 0; i + 1 < problem.size() && !repeated; ++i) {
      const char a = problem[i], b = problem[i + 1];
      const bool q = (a == '?' || a == '!') && (b == '?' || b == '!');
      const bool same = a == b && (a == '.' || a == ',' || a == ';' || a == ':');
      repeated = q || same;
    }
    r.add(std::string(rule::kRepeatedPunctuation), !repeated, repeated ? "repeated punctuation" : "");
  }

  {
    auto it = std::find_if(problem.begin(), problem.end(), [](char c) { return text::is_alpha(c); });
    const bool upper = it != problem.end() && std::isupper(static_cast<unsigned char>(*it));
    r.add(std::string(rule::kUppercaseStart), upper, upper ? "" : "first letter is not uppercase");
  }
  return r;
}

// ---------------------------------------------------------------------------
// S2: audit of the partial reasoning trace
// ---------------------------------------------------------------------------

inline ValidationReport rta_validate(std::string_view problem, std::string_view partial,
                                     const RuleConfig& cfg = {}) {
  ValidationReport r;
  r.stage = Stage::MidSolution;

  {
    const auto norm = detail::normalize_for_lexicon(partial);
    std::string hit;
    for (const auto& phrase : cfg.hallucination_lexicon)
      if (!phrase.empty() && norm.find(detail::normalize_for_lexicon(phrase)) != std::string::npos) {
        hit = phrase;
        break;
      }
    r.add(std::string(rule::kHallucination), hit.empty(), hit.empty() ? "" : "phrase '" + hit + "'");
  }

  const auto& marker = cfg.final_marker;
  {
    bool premature = false;
    if (auto pos = partial.find(marker); pos != std::string_view::npos) {
      std::size_t k = pos + marker.size();
      auto rest = partial.substr(k);
      const auto toks = text::tokenize(rest);
      std::size_t after = 0;
      if (!toks.empty() && toks.front().kind == text::Token::Kind::Number) after = toks.front().end;
      premature = !text::trim(rest.substr(after)).empty();
    }
    r.add(std::string(rule::kPrematureFinal), !premature,
          premature ? "text continues after the final marker" : "");
  }

  {
    const auto n = text::count_occurrences(partial, marker);
    r.add(std::string(rule::kDuplicateMarker), n <= 1, std::to_string(n) + " final markers");
  }

  {
    std::string bad;
    for (const auto& c : parse_arith_claims(partial))
      if (!c.holds(cfg.arith_tolerance)) {
        bad = c.to_string();
        break;
      }
    r.add(std::string(rule::kArithmetic), bad.empty(), bad.empty() ? "" : "incorrect claim " + bad);
  }

  const auto problem_numbers = text::numbers_in(problem);
  const auto trace_numbers = text::numbers_in(partial);
  {
    const Rational abs_cap(cfg.caps.magnitude_absolute);
    std::optional<Rational> rel_cap;
    if (!problem_numbers.empty()) {
      Rational mx(0);
      for (const auto& n : problem_numbers) mx = std::max(mx, n.magnitude());
      rel_cap = Rational(cfg.caps.magnitude_relative) * mx;
    }
    std::string detail;
    for (const auto& n : trace_numbers) {
      if (n.magnitude() > abs_cap) { detail = detail::rational_cap_detail("absolute cap", n, abs_cap); break; }
      if (rel_cap && n.magnitude() > *rel_cap) { detail = detail::rational_cap_detail("relative cap", n, *rel_cap); break; }
    }
    r.add(std::string(rule::kMagnitude), detail.empty(), detail);
  }

  {
    const bool problem_has_negative =
        std::any_of(problem_numbers.begin(), problem_numbers.end(), [](const Decimal& d) { return d.negative(); });
    auto neg = std::find_if(trace_numbers.begin(), trace_numbers.end(), [](const Decimal& d) { return d.negative(); });
    const bool unexpected = !problem_has_negative && neg != trace_numbers.end();
    r.add(std::string(rule::kNegativeValues), !unexpected,
          unexpected ? "unexpected negative value " + neg->text() : "");
  }
  return r;
}

// ---------------------------------------------------------------------------
// S3: convergence of the full solution
// ---------------------------------------------------------------------------

inline ValidationReport scv_validate(std::string_view /*problem*/, std::string_view solution,
                                     const RuleConfig& cfg = {}) {
  ValidationReport r;
  r.stage = Stage::FullSolution;
  const auto& marker = cfg.final_marker;

  {
    bool canonical = false;
    std::size_t start = 0;
    while (start <= solution.size() && !canonical) {
      std::size_t nl = solution.find('\n', start);
      if (nl == std::string_view::npos) nl = solution.size();
      const auto line = text::trim(solution.substr(start, nl - start));
      if (line.substr(0, marker.size()) == marker) {
        const auto rest = line.substr(marker.size());
        const auto toks = text::tokenize(rest);
        canonical = !rest.empty() && text::is_space(rest.front()) && toks.size() == 1 &&
                    toks.front().kind == text::Token::Kind::Number;
      }
      start = nl + 1;
    }
    r.add(std::string(rule::kFinalPresent), canonical,
          canonical ? "" : "no line of the form '" + marker + " <number>'");
  }

  const auto final_answer = extract_final_answer(solution, marker);
  {
    std::string detail;
    bool ok = false;
    if (!final_answer) {
      detail = "no unique final answer";
    } else {
      const auto claims = parse_arith_claims(solution);
      if (claims.empty()) {
        ok = true;
      } else {
        Rational diff = claims.back().claimed_result.value() - final_answer->value();
        if (diff < 0) diff = -diff;
        ok = diff <= cfg.arith_tolerance;
        if (!ok)
          detail = "final answer " + final_answer->text() + " differs from last computed " +
                   claims.back().claimed_result.text();
      }
    }
    r.add(std::string(rule::kAnswerConsistent), ok, detail);
  }

  {
    const auto t = text::trim(solution);
    bool complete = false;
    if (!t.empty()) {
      const auto nl = t.rfind('\n');
      const auto last_line = text::trim(nl == std::string_view::npos ? t : t.substr(nl + 1));
      if (last_line.substr(0, marker.size()) == marker) {
        complete = true;
      } else if (!detail::ends_with(t, "...") && !detail::ends_with(t, "\xE2\x80\xA6")) {
        const char last = t.back();
        complete = detail::is_terminal(last) ||
                   ((last == '"' || last == ')' || last == '\'') && t.size() > 1 &&
                    detail::is_terminal(t[t.size() - 2]));
      }
    }
    r.add(std::string(rule::kCompleteEnding), complete, complete ? "" : "generation ends mid-sentence");
  }

  {
    std::string leaked;
    for (const auto& m : cfg.leakage_markers)
      if (!m.empty() && solution.find(m) != std::string_view::npos) {
        leaked = m;
        break;
      }
    r.add(std::string(rule::kNoLeakage), leaked.empty(), leaked.empty() ? "" : "leaked '" + leaked + "'");
  }

  const auto values = marker_values(solution, marker);
  r.add(std::string(rule::kSingleFinal), values.size() == 1,
        std::to_string(values.size()) + " final-answer lines");

  {
    const Rational cap(cfg.caps.magnitude_absolute);
    std::string detail;
    for (const auto& v : values)
      if (v && v->magnitude() > cap) {
        detail = detail::rational_cap_detail("final answer", *v, cap);
        break;
      }
    r.add(std::string(rule::kFinalMagnitude), detail.empty(), detail);
  }
  return r;
}

/// Dispatches to the validator for gate `stage` (S1..S3).
inline ValidationReport validate_stage(Stage stage, std::string_view problem, std::string_view stage_text,
                                       const RuleConfig& cfg) {
  switch (stage) {
    case Stage::Problem: return wpe_validate(stage_text, cfg);
    case Stage::MidSolution: return rta_validate(problem, stage_text, cfg);
    case Stage::FullSolution: return scv_validate(problem, stage_text, cfg);
    case Stage::Evaluation: break;
  }
  throw std::invalid_argument("stage S4 has no rule-based validator");
}

}  // namespace inflight
