#include "inflight/dedup/judge.hpp"
#include "inflight/dedup/minhash.hpp"
#include "inflight/generators/scripted.hpp"
#include "inflight/validators/validators.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

using namespace inflight;

namespace {

// Exact Jaccard over the character shingle sets, computed without the
// hashing path.
double exact_jaccard(const std::string& a, const std::string& b, std::size_t k) {
  auto shingles = [&](const std::string& s) {
    std::set<std::string> out;
    const auto n = normalize_for_shingles(s);
    for (std::size_t i = 0; i + k <= n.size(); ++i) out.insert(n.substr(i, k));
    return out;
  };
  const auto sa = shingles(a), sb = shingles(b);
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

std::string random_words(Rng& rng, int n) {
  static const std::vector<std::string> vocab{"apple", "river", "stone", "count", "seven", "garden", "blue",
                                              "market", "train", "paper", "eleven", "window", "cloud",
                                              "basket", "pencil", "orange", "silver", "tower", "forty", "lamp"};
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += vocab[static_cast<std::size_t>(uniform_int(rng, 0, vocab.size() - 1))];
  }
  return s;
}

std::string mutate(Rng& rng, std::string s, int edits) {
  for (int e = 0; e < edits; ++e) {
    const auto pos = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(s.size()) - 1));
    s[pos] = static_cast<char>('a' + uniform_int(rng, 0, 25));
  }
  return s;
}

}  // namespace

TEST(MinHash, NormalizationLowercasesAndCollapsesWhitespace) {
  EXPECT_EQ(normalize_for_shingles("  Hello \n\t World  "), "hello world");
  EXPECT_EQ(normalize_for_shingles(""), "");
}

TEST(MinHash, ExactDuplicatesMatchFully) {
  const std::string t = "Tom has 4 cartons of 60 eggs. How many eggs?";
  const auto a = minhash_signature(t), b = minhash_signature(t);
  EXPECT_EQ(a, b);
  EXPECT_EQ(estimate_jaccard(a, b), 1.0);
  EXPECT_EQ(minhash_signature("TOM HAS 4   cartons of 60 eggs. How many eggs?"), a);
}

TEST(MinHash, DegenerateTextIsReported) {
  EXPECT_THROW(minhash_signature("abc"), DegenerateText);
  EXPECT_NO_THROW(minhash_signature("abcde"));
}

// Property: the estimate stays within 4 standard errors of the exact
// Jaccard index, J(1-J)/n being the per-signature variance.
TEST(MinHash, EstimateTracksExactJaccard) {
  Rng rng(77);
  const MinHashParams p;
  int outside = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::string a = random_words(rng, static_cast<int>(uniform_int(rng, 10, 60)));
    const std::string b = bernoulli(rng, 0.5) ? mutate(rng, a, static_cast<int>(uniform_int(rng, 1, 30)))
                                              : random_words(rng, static_cast<int>(uniform_int(rng, 10, 60)));
    const double j = exact_jaccard(a, b, static_cast<std::size_t>(p.shingle_size));
    const double est = estimate_jaccard(minhash_signature(a, p), minhash_signature(b, p));
    const double se = std::sqrt(std::max(j * (1 - j), 1e-4) / p.num_hashes);
    if (std::abs(est - j) > 4 * se) ++outside;
  }
  EXPECT_LE(outside, 1);
}

TEST(MinHashIndex, FlagsNearDuplicatesAndInsertsOthers) {
  MinHashIndex idx;
  const std::string a = "Aiden buys 4 boxes of apples with 12 apples in each box. How many apples?";
  EXPECT_FALSE(idx.is_duplicate(minhash_signature(a), 1));
  EXPECT_TRUE(idx.is_duplicate(minhash_signature(a), 2));
  EXPECT_TRUE(idx.is_duplicate(minhash_signature(a + " "), 3));
  EXPECT_FALSE(idx.is_duplicate(minhash_signature("A completely different story about rivers and stones."), 4));
  EXPECT_EQ(idx.size(), 2u);
  EXPECT_EQ(idx.find_duplicate(minhash_signature(a)), 1u);
  EXPECT_THROW(idx.is_duplicate(Signature(3, 0), 5), std::invalid_argument);
}

TEST(MinHashIndex, SnapshotRoundTrip) {
  MinHashParams p;
  p.num_hashes = 32;
  p.threshold = 0.7;
  MinHashIndex idx(p);
  Rng rng(3);
  std::vector<std::string> texts;
  for (int i = 0; i < 20; ++i) {
    texts.push_back(random_words(rng, 30));
    idx.is_duplicate(minhash_signature(texts.back(), p), static_cast<std::uint64_t>(i));
  }
  const auto path = (std::filesystem::temp_directory_path() / "inflight_test.idx").string();
  idx.save(path);
  const auto back = MinHashIndex::load(path);
  EXPECT_EQ(back.params(), p);
  EXPECT_EQ(back.size(), idx.size());
  for (const auto& t : texts) EXPECT_EQ(back.find_duplicate(minhash_signature(t, p)), idx.find_duplicate(minhash_signature(t, p)));

  // Truncation and wrong magic are detected.
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  EXPECT_THROW(MinHashIndex::load(path), std::runtime_error);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "nope";
  }
  EXPECT_THROW(MinHashIndex::load(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(DuplicateClusters, GroupsAndListsDegenerate) {
  Rng rng(9);
  const auto a = random_words(rng, 40), b = random_words(rng, 40);
  const std::vector<std::string> texts{a, b, a, "x", b + " ", random_words(rng, 40)};
  const auto c = find_duplicate_clusters(texts);
  EXPECT_EQ(c.degenerate, std::vector<std::size_t>{3});
  EXPECT_EQ(c.clusters, (std::vector<std::vector<std::size_t>>{{0, 2}, {1, 4}}));
}

TEST(MinHash, ParamValidation) {
  EXPECT_TRUE(validate_minhash_params({}).empty());
  MinHashParams p;
  p.threshold = 1.0;
  p.num_hashes = 0;
  EXPECT_EQ(validate_minhash_params(p).size(), 2u);
}

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

TEST(Judge, ParsesFirstIntegerInRange) {
  EXPECT_EQ(parse_judge_score("Rating: 4"), 4);
  EXPECT_EQ(parse_judge_score("5"), 5);
  EXPECT_EQ(parse_judge_score("I'd say 2 out of 5"), 2);
  EXPECT_FALSE(parse_judge_score("Rating: 7").has_value());
  EXPECT_FALSE(parse_judge_score("Rating: 0").has_value());
  EXPECT_FALSE(parse_judge_score("excellent").has_value());
  EXPECT_FALSE(parse_judge_score("12345").has_value());
}

TEST(Judge, RubricRendering) {
  EXPECT_EQ(render_rubric("P={problem} S={solution} P={problem}", "p", "s"), "P=p S=s P=p");
  EXPECT_NE(render_rubric(kDefaultRubric, "QQ", "SS").find("QQ"), std::string::npos);
  JudgeConfig c;
  EXPECT_TRUE(validate_judge_config(c).empty());
  c.rubric = "no placeholders";
  c.min_score = 6;
  EXPECT_EQ(validate_judge_config(c).size(), 2u);
}

TEST(Judge, AcceptsAtOrAboveMinScore) {
  for (int score = 1; score <= 5; ++score) {
    FunctionBackend b([&](const GenerationRequest&) { return Generation{"Rating: " + std::to_string(score), 2, 10, true}; });
    JudgeConfig cfg;
    const auto v = judge_sample("P?", "S.", b, cfg, 1, 2);
    EXPECT_EQ(v.score, score);
    EXPECT_EQ(v.accepted, score >= 3);
    EXPECT_EQ(v.rule, score >= 3 ? "" : std::string(rule::kJudgeLowScore));
    EXPECT_EQ(v.tokens, 12);
  }
}

TEST(Judge, RetriesUnparseableRepliesAndCountsEveryAttempt) {
  int calls = 0;
  FunctionBackend b([&](const GenerationRequest& r) {
    ++calls;
    EXPECT_NE(r.user.find("Problem:\nP?"), std::string::npos);
    return Generation{calls < 3 ? "hmm" : "Rating: 5", 1, 4, true};
  });
  JudgeConfig cfg;
  cfg.retries = 2;
  const auto v = judge_sample("P?", "S.", b, cfg, 1, 2);
  EXPECT_TRUE(v.accepted);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(v.tokens, 15);

  calls = -10;
  const auto bad = judge_sample("P?", "S.", b, cfg, 1, 2);
  EXPECT_FALSE(bad.accepted);
  EXPECT_EQ(bad.rule, rule::kJudgeUnparseable);
}

TEST(Judge, BackendFailureRejects) {
  FunctionBackend b([](const GenerationRequest&) -> Generation { throw BackendError("down"); });
  const auto v = judge_sample("P?", "S.", b, {}, 1, 2);
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.rule, rule::kJudgeBackendError);
}

TEST(FinalProduct, TruthTable) {
  ValidationReport pass, fail;
  pass.add("x", true);
  fail.add("x", false);
  for (int s = 0; s < 2; ++s)
    for (int d = 0; d < 2; ++d)
      for (int j = 0; j < 2; ++j)
        EXPECT_EQ(final_product(s ? pass : fail, d == 1, j == 1), (s == 1 && d == 0 && j == 1) ? 1 : 0);
}
