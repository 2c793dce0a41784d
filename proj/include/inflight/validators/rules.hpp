#pragma once

#include "inflight/core/types.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace inflight {

/// Stable rule identifiers. These strings appear in reports and trajectory
/// logs and are part of the record format.
namespace rule {
inline constexpr std::string_view kQuestionMark = "wpe.question_mark";
inline constexpr std::string_view kEnglishOnly = "wpe.english_only";
inline constexpr std::string_view kWordCount = "wpe.word_count";
inline constexpr std::string_view kCutoffSuffix = "wpe.cutoff_suffix";
inline constexpr std::string_view kRepeatedPunctuation = "wpe.repeated_punctuation";
inline constexpr std::string_view kUppercaseStart = "wpe.uppercase_start";

inline constexpr std::string_view kHallucination = "rta.hallucination";
inline constexpr std::string_view kPrematureFinal = "rta.premature_final";
inline constexpr std::string_view kDuplicateMarker = "rta.duplicate_final";
inline constexpr std::string_view kArithmetic = "rta.arithmetic";
inline constexpr std::string_view kMagnitude = "rta.magnitude";
inline constexpr std::string_view kNegativeValues = "rta.negative_values";

inline constexpr std::string_view kFinalPresent = "scv.final_present";
inline constexpr std::string_view kAnswerConsistent = "scv.answer_consistent";
inline constexpr std::string_view kCompleteEnding = "scv.complete_ending";
inline constexpr std::string_view kNoLeakage = "scv.no_leakage";
inline constexpr std::string_view kSingleFinal = "scv.single_final";
inline constexpr std::string_view kFinalMagnitude = "scv.final_magnitude";

inline constexpr std::array<std::string_view, 6> kWpe{kQuestionMark, kEnglishOnly, kWordCount,
                                                      kCutoffSuffix, kRepeatedPunctuation,
                                                      kUppercaseStart};
inline constexpr std::array<std::string_view, 6> kRta{kHallucination, kPrematureFinal,
                                                      kDuplicateMarker, kArithmetic, kMagnitude,
                                                      kNegativeValues};
inline constexpr std::array<std::string_view, 6> kScv{kFinalPresent, kAnswerConsistent,
                                                      kCompleteEnding, kNoLeakage, kSingleFinal,
                                                      kFinalMagnitude};

// Non-validator rejection reasons.
inline constexpr std::string_view kBackendError = "backend.error";
inline constexpr std::string_view kJudgeLowScore = "judge.low_score";
inline constexpr std::string_view kJudgeUnparseable = "judge.unparseable";
inline constexpr std::string_view kJudgeBackendError = "judge.backend_error";
inline constexpr std::string_view kDuplicate = "dedup.duplicate";
inline constexpr std::string_view kDegenerate = "dedup.degenerate";
}  // namespace rule

struct RuleConfig {
  std::vector<std::string> hallucination_lexicon{"as an AI", "I cannot", "hypothetically",
                                                 "let's assume the answer"};
  std::vector<std::string> leakage_markers{"SYSTEM:", "User:"};
  std::string final_marker = "####";
  Caps caps;
  Rational arith_tolerance{0};
};

inline std::vector<std::string> validate_rule_config(const RuleConfig& cfg) {
  std::vector<std::string> v;
  if (cfg.hallucination_lexicon.empty()) v.push_back("hallucination_lexicon must not be empty");
  if (cfg.leakage_markers.empty()) v.push_back("leakage_markers must not be empty");
  for (const auto& m : cfg.leakage_markers)
    if (m.empty()) v.push_back("leakage_markers must not contain empty strings");
  for (const auto& p : cfg.hallucination_lexicon)
    if (p.empty()) v.push_back("hallucination_lexicon must not contain empty strings");
  if (cfg.final_marker.empty()) v.push_back("final_marker must not be empty");
  if (cfg.arith_tolerance < 0) v.push_back("arith_tolerance must be >= 0");
  return v;
}

}  // namespace inflight
