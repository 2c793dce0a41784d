#include "inflight/core/random.hpp"
#include "inflight/validators/validators.hpp"
#include "rule_fixtures.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace inflight;
using namespace inflight::fixtures;

TEST(RuleFixtures, EachFixtureMatchesItsRule) {
  for (const auto& f : rule_fixtures()) {
    const auto report = run(f);
    const auto* o = find(report, f.rule);
    ASSERT_NE(o, nullptr) << f.rule;
    EXPECT_EQ(o->passed, f.pass) << f.rule << " on: " << f.text << " (" << o->detail << ")";
  }
}

// Every published rejection criterion has a passing and a failing fixture.
TEST(RuleFixtures, CoverEveryRuleIdBothWays) {
  std::map<std::string, std::set<bool>> seen;
  for (const auto& f : rule_fixtures()) seen[f.rule].insert(f.pass);
  std::vector<std::string_view> all;
  for (auto id : rule::kWpe) all.push_back(id);
  for (auto id : rule::kRta) all.push_back(id);
  for (auto id : rule::kScv) all.push_back(id);
  for (auto id : all) {
    EXPECT_EQ(seen[std::string(id)], (std::set<bool>{false, true})) << id;
  }
  // And nothing outside the published ids.
  for (const auto& [id, _] : seen)
    EXPECT_NE(std::find(all.begin(), all.end(), id), all.end()) << id;
}

TEST(Wpe, WellFormedProblemPassesAllSix) {
  const auto r = wpe_validate(kProblem);
  EXPECT_EQ(r.stage, Stage::Problem);
  EXPECT_EQ(r.check_count(), 6);
  EXPECT_EQ(r.score, 6);
}

TEST(Wpe, ShortLowercaseDoubledQuestionScoresThree) {
  const auto r = wpe_validate("how many eggs??");
  EXPECT_EQ(r.score, 3);
  EXPECT_EQ(r.failed_rules(), (std::vector<std::string>{"wpe.word_count", "wpe.repeated_punctuation",
                                                        "wpe.uppercase_start"}));
}

TEST(Wpe, WordBoundsFollowCaps) {
  RuleConfig cfg;
  cfg.caps.word_min = 3;
  EXPECT_TRUE(find(wpe_validate("How many eggs?", cfg), rule::kWordCount)->passed);
}

TEST(Rta, ProblemMaxSixtyCapsAtSixThousand) {
  const auto r = rta_validate(kProblem, "The farm ends up with 7,000,000 eggs.");
  const auto* o = find(r, rule::kMagnitude);
  EXPECT_FALSE(o->passed);
  EXPECT_NE(o->detail.find("6000"), std::string::npos);
}

TEST(Rta, CorrectTraceScoresSix) {
  const auto r = rta_validate(kProblem, kGoodTrace);
  EXPECT_EQ(r.score, 6);
  EXPECT_EQ(r.stage, Stage::MidSolution);
}

TEST(Rta, ToleranceAdmitsRoundedClaims) {
  RuleConfig cfg;
  const std::string trace = "Each share is 10 ÷ 3 = 3.33 dollars.";
  EXPECT_FALSE(find(rta_validate(kProblem, trace, cfg), rule::kArithmetic)->passed);
  cfg.arith_tolerance = Rational(1, 100);
  EXPECT_TRUE(find(rta_validate(kProblem, trace, cfg), rule::kArithmetic)->passed);
}

TEST(Rta, LexiconIsExtensible) {
  RuleConfig cfg;
  cfg.hallucination_lexicon.push_back("trust me");
  EXPECT_FALSE(find(rta_validate(kProblem, "Trust me, 4 × 60 = 240.", cfg), rule::kHallucination)->passed);
}

TEST(Scv, AnswerMatchingLastClaimPassesFirstTwoChecks) {
  const std::string solution =
      "First month: 4 × 60 = 240 eggs. Second month: 4 × 60 = 240 eggs. Together 240 + 240 = 480. "
      "After 12 break, 480 - 12 = 468 eggs remain.\n#### 468";
  const auto r = scv_validate(kProblem, solution);
  EXPECT_TRUE(find(r, rule::kFinalPresent)->passed);
  EXPECT_TRUE(find(r, rule::kAnswerConsistent)->passed);
  EXPECT_EQ(r.score, 6);
}

TEST(Scv, FullyValidSolutionScoresSix) { EXPECT_EQ(scv_validate(kProblem, kGoodSolution).score, 6); }

TEST(ValidateStage, DispatchesAndRefusesEvaluation) {
  RuleConfig cfg;
  EXPECT_EQ(validate_stage(Stage::Problem, "", kProblem, cfg), wpe_validate(kProblem, cfg));
  EXPECT_EQ(validate_stage(Stage::MidSolution, kProblem, kGoodTrace, cfg), rta_validate(kProblem, kGoodTrace, cfg));
  EXPECT_EQ(validate_stage(Stage::FullSolution, kProblem, kGoodSolution, cfg),
            scv_validate(kProblem, kGoodSolution, cfg));
  EXPECT_THROW(validate_stage(Stage::Evaluation, kProblem, kGoodSolution, cfg), std::invalid_argument);
}

TEST(ArithParser, Examples) {
  auto c = parse_arith_claims("So 4 × 60 = 240 eggs.");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].operands.size(), 2u);
  EXPECT_EQ(c[0].operands[0].value(), 4);
  EXPECT_EQ(c[0].operands[1].value(), 60);
  EXPECT_EQ(c[0].ops[0], ArithOp::Mul);
  EXPECT_EQ(c[0].claimed_result.value(), 240);
  EXPECT_TRUE(c[0].holds());

  c = parse_arith_claims("Total: $1,200 + 300 = 1,500");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].operands[0].value(), 1200);
  EXPECT_EQ(c[0].ops[0], ArithOp::Add);
  EXPECT_EQ(c[0].claimed_result.value(), 1500);

  EXPECT_TRUE(parse_arith_claims("about sixty eggs").empty());
}

TEST(ArithParser, OperatorSpellings) {
  for (const char* s : {"6 * 7 = 42", "6 x 7 = 42", "6 × 7 = 42"}) {
    auto c = parse_arith_claims(s);
    ASSERT_EQ(c.size(), 1u) << s;
    EXPECT_EQ(c[0].ops[0], ArithOp::Mul) << s;
  }
  for (const char* s : {"42 / 7 = 6", "42 ÷ 7 = 6"}) {
    auto c = parse_arith_claims(s);
    ASSERT_EQ(c.size(), 1u) << s;
    EXPECT_EQ(c[0].ops[0], ArithOp::Div) << s;
  }
  auto c = parse_arith_claims("9 - 4 = 5");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].ops[0], ArithOp::Sub);
}

TEST(ArithParser, ChainsEvaluateLeftToRight) {
  auto c = parse_arith_claims("2 + 3 × 4 = 20");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_TRUE(c[0].holds());
  c = parse_arith_claims("4 × 60 = 240 + 12 = 252");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_TRUE(c[0].holds());
  EXPECT_TRUE(c[1].holds());
  EXPECT_FALSE(parse_arith_claims("5 ÷ 0 = 1")[0].holds());
}

// Property: for random claims, the parser recovers the operands and its
// verdict matches exact left-to-right evaluation done here from the
// generating integers.
TEST(ArithParser, SoundOnRandomClaims) {
  Rng rng(2024);
  const char* syms[] = {"+", "-", "×", "÷"};
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = static_cast<int>(uniform_int(rng, 2, 4));
    std::vector<std::int64_t> cents;  // operands in hundredths
    std::vector<int> ops;
    std::string text = "So ";
    for (int i = 0; i < n; ++i) {
      const bool decimal = bernoulli(rng, 0.3);
      const std::int64_t whole = uniform_int(rng, 1, bernoulli(rng, 0.2) ? 999999 : 999);
      const std::int64_t frac = decimal ? uniform_int(rng, 0, 99) : 0;
      cents.push_back(whole * 100 + frac);
      std::string w = std::to_string(whole);
      if (whole >= 1000 && bernoulli(rng, 0.5))
        for (int p = static_cast<int>(w.size()) - 3; p > 0; p -= 3) w.insert(static_cast<std::size_t>(p), ",");
      if (i == 0 && bernoulli(rng, 0.3)) w = "$" + w;
      if (decimal) w += "." + std::string(frac < 10 ? "0" : "") + std::to_string(frac);
      if (i > 0) {
        ops.push_back(static_cast<int>(uniform_int(rng, 0, 3)));
        text += std::string(" ") + syms[ops.back()] + " ";
      }
      text += w;
    }
    boost::multiprecision::cpp_rational acc(cents[0], 100);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const boost::multiprecision::cpp_rational v(cents[i + 1], 100);
      if (ops[i] == 0) acc += v;
      else if (ops[i] == 1) acc -= v;
      else if (ops[i] == 2) acc *= v;
      else acc /= v;
    }
    // State the truth when it is a short decimal, otherwise a wrong integer.
    const bool claim_truth = bernoulli(rng, 0.5);
    std::string result;
    bool truth_stated = false;
    if (claim_truth && boost::multiprecision::denominator(acc) == 1 && acc >= 0) {
      result = boost::multiprecision::numerator(acc).str();
      truth_stated = true;
    } else {
      const auto off = boost::multiprecision::cpp_rational(uniform_int(rng, 1, 50));
      boost::multiprecision::cpp_rational wrong = acc + off;
      if (wrong < 0) wrong = -wrong + 1;
      const boost::multiprecision::cpp_int floor_val = boost::multiprecision::numerator(wrong) /
                                                       boost::multiprecision::denominator(wrong);
      result = floor_val.str();
      truth_stated = boost::multiprecision::cpp_rational(floor_val) == acc;
    }
    text += " = " + result + " units.";
    const auto claims = parse_arith_claims(text);
    ASSERT_EQ(claims.size(), 1u) << text;
    ASSERT_EQ(claims[0].operands.size(), static_cast<std::size_t>(n)) << text;
    for (int i = 0; i < n; ++i)
      ASSERT_EQ(claims[0].operands[i].value(), boost::multiprecision::cpp_rational(cents[i], 100)) << text;
    ASSERT_EQ(claims[0].holds(), truth_stated) << text;
  }
}

TEST(FinalAnswer, Extraction) {
  EXPECT_EQ(extract_final_answer("so the total is 468.\n#### 468")->value(), 468);
  EXPECT_FALSE(extract_final_answer("#### 366 then more text #### 468").has_value());
  EXPECT_FALSE(extract_final_answer("no marker here").has_value());
  EXPECT_FALSE(extract_final_answer("#### many").has_value());
  EXPECT_EQ(extract_final_answer("@@ 12", "@@")->value(), 12);
}

// Properties over a mixed corpus: determinism, score bounds, unique ids.
TEST(ValidatorProperties, DeterministicBoundedUnique) {
  std::vector<std::string> corpus = {kProblem, kGoodTrace, kGoodSolution, "", "????", "#### 1 #### 2",
                                     "4 × 60 = 180 SYSTEM: -5", "as an ai 10,000,000,000"};
  for (const auto& f : rule_fixtures()) corpus.push_back(f.text);
  for (const auto& s : corpus) {
    for (const auto& r : {wpe_validate(s), rta_validate(kProblem, s), scv_validate(kProblem, s)}) {
      ASSERT_GE(r.score, 0);
      ASSERT_LE(r.score, 6);
      ASSERT_EQ(r.check_count(), 6);
      std::set<std::string> ids;
      for (const auto& o : r.outcomes) ids.insert(o.rule_id);
      ASSERT_EQ(ids.size(), r.outcomes.size());
    }
    ASSERT_EQ(wpe_validate(s), wpe_validate(s));
    ASSERT_EQ(rta_validate(kProblem, s), rta_validate(kProblem, s));
    ASSERT_EQ(scv_validate(kProblem, s), scv_validate(kProblem, s));
  }
}

// Property: appending a failing pattern to a trace never raises its S2 score.
TEST(ValidatorProperties, AppendingFaultsNeverRaisesRtaScore) {
  const std::vector<std::string> faults = {" As an AI I cannot say.", " Then 7 × 8 = 54.", "\n#### 12 and more.",
                                           "\n#### 3\n#### 4", " That is 90,000,000 eggs.", " We get -4 eggs."};
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::string base;
    const int steps = static_cast<int>(uniform_int(rng, 1, 5));
    for (int i = 0; i < steps; ++i) {
      const auto a = uniform_int(rng, 2, 30), b = uniform_int(rng, 2, 30);
      const auto r = a * b + (bernoulli(rng, 0.2) ? 1 : 0);
      base += "We have " + std::to_string(a) + " × " + std::to_string(b) + " = " + std::to_string(r) + " items. ";
    }
    std::string text = base;
    int prev = rta_validate(kProblem, text).score;
    for (int k = 0; k < 3; ++k) {
      text += faults[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(faults.size()) - 1))];
      const int now = rta_validate(kProblem, text).score;
      ASSERT_LE(now, prev) << text;
      prev = now;
    }
  }
}
