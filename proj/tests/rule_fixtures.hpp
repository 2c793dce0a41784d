#pragma once

// Pass/fail fixtures for every validator rule id, shared by the unit tests
// and the acceptance binary.

#include "inflight/validators/validators.hpp"

#include <string>
#include <vector>

namespace inflight::fixtures {

inline const std::string kProblem = "If Tom buys 4 cartons of 60 eggs each month, how many eggs in two months?";
inline const std::string kGoodTrace = "Each month Tom buys 4 × 60 = 240 eggs. Over two months that is 240 × 2 = 480 eggs.";
inline const std::string kGoodSolution = kGoodTrace + "\n#### 480";

inline const RuleOutcome* find(const ValidationReport& r, std::string_view id) {
  for (const auto& o : r.outcomes)
    if (o.rule_id == id) return &o;
  return nullptr;
}

struct Fixture {
  std::string rule;
  std::string problem;  // S2/S3 context
  std::string text;     // the text under validation
  bool pass;
};

inline ValidationReport run(const Fixture& f) {
  const auto prefix = f.rule.substr(0, 3);
  if (prefix == "wpe") return wpe_validate(f.text);
  if (prefix == "rta") return rta_validate(f.problem, f.text);
  return scv_validate(f.problem, f.text);
}

inline std::string many_words(int n) {
  std::string s = "Tom";
  for (int i = 1; i < n - 1; ++i) s += " eggs";
  return s + " now?";
}


inline const std::vector<Fixture>& rule_fixtures() {
  static const std::vector<Fixture> f = {
      // WPE
      {"wpe.question_mark", "", kProblem, true},
      {"wpe.question_mark", "", "Tom buys 4 cartons of 60 eggs each month for two whole months.", false},
      {"wpe.english_only", "", kProblem, true},
      {"wpe.english_only", "", "If Tom buys 4 cartons of 60 eggs 每个月, how many eggs in two months?", false},
      {"wpe.english_only", "", "If Tom buys 4 cartons of 60 яиц each month, how many eggs in two months?", false},
      {"wpe.english_only", "", "If Tom buys 4 cartons of 60 بيض each month, how many eggs in two months?", false},
      {"wpe.word_count", "", kProblem, true},
      {"wpe.word_count", "", many_words(8), true},
      {"wpe.word_count", "", many_words(100), true},
      {"wpe.word_count", "", "How many eggs are left?", false},
      {"wpe.word_count", "", many_words(101), false},
      {"wpe.cutoff_suffix", "", kProblem, true},
      {"wpe.cutoff_suffix", "", "Tom asked: \"How many eggs does he have after two months?\"", true},
      {"wpe.cutoff_suffix", "", "If Tom buys 4 cartons of 60 eggs each month, how many eggs are in the...", false},
      {"wpe.cutoff_suffix", "", "If Tom buys 4 cartons of 60 eggs each month, how many eggs does he have", false},
      {"wpe.cutoff_suffix", "", "If Tom buys 4 cartons of 60 eggs each month, how many are sold to.", false},
      {"wpe.repeated_punctuation", "", kProblem, true},
      {"wpe.repeated_punctuation", "", "If Tom buys 4 cartons of 60 eggs each month, how many eggs in two months??",
       false},
      {"wpe.repeated_punctuation", "", "If Tom buys 4 cartons,, of 60 eggs each month, how many eggs in two months?",
       false},
      {"wpe.uppercase_start", "", kProblem, true},
      {"wpe.uppercase_start", "", "\"Tom buys 4 cartons of 60 eggs each month, how many in two months?\"", true},
      {"wpe.uppercase_start", "", "if Tom buys 4 cartons of 60 eggs each month, how many eggs in two months?", false},
      // RTA
      {"rta.hallucination", kProblem, kGoodTrace, true},
      {"rta.hallucination", kProblem, "As an AI, I would say 4 × 60 = 240 eggs.", false},
      {"rta.hallucination", kProblem, "Let\xE2\x80\x99s assume the answer is 480 eggs.", false},
      {"rta.premature_final", kProblem, kGoodTrace, true},
      {"rta.premature_final", kProblem, kGoodSolution, true},
      {"rta.premature_final", kProblem, "4 × 60 = 240.\n#### 240 and now the second month.", false},
      {"rta.duplicate_final", kProblem, kGoodSolution, true},
      {"rta.duplicate_final", kProblem, "4 × 60 = 240.\n#### 240\n#### 480", false},
      {"rta.arithmetic", kProblem, kGoodTrace, true},
      {"rta.arithmetic", kProblem, "For the second month Tom has 4 × 60 = 180 eggs.", false},
      {"rta.magnitude", kProblem, kGoodTrace, true},
      {"rta.magnitude", kProblem, "That gives 6,000 eggs at most.", true},
      {"rta.magnitude", kProblem, "The farm ends up with 7,000,000 eggs.", false},
      {"rta.magnitude", kProblem, "The farm ends up with 6,001 eggs.", false},
      {"rta.magnitude",
       "A city has 9,000,000 people and 2,000,000 more move in, how many people live there now?",
       "So 9,000,000 + 2,000,000 = 11,000,000 people.", false},
      {"rta.negative_values", kProblem, kGoodTrace, true},
      {"rta.negative_values", kProblem, "Then 240 - 300 = -60 eggs are left.", false},
      {"rta.negative_values",
       "The temperature is -5 degrees at night and rises 12 degrees by noon, what is it at noon?",
       "At noon it is -5 + 12 = 7 degrees.", true},
      // SCV
      {"scv.final_present", kProblem, kGoodSolution, true},
      {"scv.final_present", kProblem, kGoodTrace + " The answer is 480.", false},
      {"scv.final_present", kProblem, kGoodTrace + "\n#### four hundred eighty", false},
      {"scv.answer_consistent", kProblem, kGoodSolution, true},
      {"scv.answer_consistent", kProblem, "Tom buys four cartons of sixty eggs.\n#### 480", true},
      {"scv.answer_consistent", kProblem, kGoodTrace + "\n#### 470", false},
      {"scv.answer_consistent", kProblem, kGoodTrace, false},
      {"scv.complete_ending", kProblem, kGoodSolution, true},
      {"scv.complete_ending", kProblem, kGoodTrace, true},
      {"scv.complete_ending", kProblem, "Each month Tom buys 4 × 60 = 240 eggs. Then we multiply by", false},
      {"scv.complete_ending", kProblem, "Each month Tom buys 4 × 60 = 240 eggs and so...", false},
      {"scv.no_leakage", kProblem, kGoodSolution, true},
      {"scv.no_leakage", kProblem, kGoodTrace + "\nSYSTEM: answer in one line.\n#### 480", false},
      {"scv.no_leakage", kProblem, kGoodSolution + "\nUser: thanks!", false},
      {"scv.single_final", kProblem, kGoodSolution, true},
      {"scv.single_final", kProblem, kGoodTrace + "\n#### 480\n#### 480", false},
      {"scv.single_final", kProblem, kGoodTrace, false},
      {"scv.final_magnitude", kProblem, kGoodSolution, true},
      {"scv.final_magnitude", kProblem, "So 5,000 × 4,000 = 20,000,000 eggs.\n#### 20000000", false},
  };
  return f;
}


}  // namespace inflight::fixtures
