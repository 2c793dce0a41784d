#pragma once

#include "inflight/core/log.hpp"
#include "inflight/core/random.hpp"
#include "inflight/core/types.hpp"
#include "inflight/generators/backend.hpp"
#include "inflight/validators/rules.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

namespace inflight {

inline constexpr std::string_view kDefaultRubric =
    "You are grading a grade-school math word problem and its worked solution.\n"
    "\n"
    "Problem:\n"
    "{problem}\n"
    "\n"
    "Solution:\n"
    "{solution}\n"
    "\n"
    "Rate the pair on a scale from 1 to 5:\n"
    "5 - the problem is clear and the solution is correct, complete and easy to follow.\n"
    "4 - the solution is correct with minor issues of style or clarity.\n"
    "3 - the solution reaches the right answer but the reasoning has gaps.\n"
    "2 - the solution contains a mistake that changes the answer.\n"
    "1 - the problem or the solution is unusable.\n"
    "\n"
    "Reply with the rating only, in the form \"Rating: N\".\n";

struct JudgeConfig {
  int min_score = 3;  // accept iff score >= min_score
  int retries = 2;    // extra attempts after an unparseable reply
  std::string rubric{kDefaultRubric};
  double temperature = 0.0;
  std::int64_t max_tokens = 16;

  friend bool operator==(const JudgeConfig&, const JudgeConfig&) = default;
};

inline std::vector<std::string> validate_judge_config(const JudgeConfig& c) {
  std::vector<std::string> v;
  if (c.min_score < 1 || c.min_score > 5) v.push_back("judge.min_score must lie in [1, 5]");
  if (c.retries < 0) v.push_back("judge.retries must be >= 0");
  if (c.rubric.find("{problem}") == std::string::npos || c.rubric.find("{solution}") == std::string::npos)
    v.push_back("judge rubric must contain {problem} and {solution}");
  if (c.max_tokens < 1) v.push_back("judge.max_tokens must be >= 1");
  return v;
}

inline std::string load_rubric(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read rubric " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string render_rubric(std::string_view rubric, std::string_view problem, std::string_view solution) {
  std::string out;
  for (std::size_t i = 0; i < rubric.size();) {
    if (rubric.substr(i, 9) == "{problem}") { out += problem; i += 9; }
    else if (rubric.substr(i, 10) == "{solution}") { out += solution; i += 10; }
    else out += rubric[i++];
  }
  return out;
}

/// First integer in the reply, if it lies in 1..5.
inline std::optional<int> parse_judge_score(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isdigit(static_cast<unsigned char>(reply[i]))) ++i;
  if (i == reply.size()) return std::nullopt;
  std::size_t j = i;
  while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
  if (j - i > 2) return std::nullopt;
  const int v = std::stoi(std::string(reply.substr(i, j - i)));
  if (v < 1 || v > 5) return std::nullopt;
  return v;
}

struct JudgeVerdict {
  std::optional<int> score;
  bool accepted = false;
  std::string rule;         // rejection reason, empty when accepted
  std::string reply;        // last raw reply
  std::int64_t tokens = 0;  // prompt + completion over all attempts
};

inline JudgeVerdict judge_sample(std::string_view problem, std::string_view solution, GeneratorBackend& backend,
                                 const JudgeConfig& cfg, std::uint64_t trajectory_seed, std::uint64_t seed) {
  JudgeVerdict v;
  GenerationRequest req;
  req.stage = Stage::Evaluation;
  req.user = render_rubric(cfg.rubric, problem, solution);
  req.params.temperature = cfg.temperature;
  req.params.max_tokens = cfg.max_tokens;
  req.trajectory_seed = trajectory_seed;
  for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
    req.seed = derive_seed(seed, {static_cast<std::uint64_t>(attempt)});
    Generation g;
    try {
      g = backend.generate(req);
    } catch (const std::exception& e) {
      log::warning(std::string("judge call failed: ") + e.what());
      v.rule = std::string(rule::kJudgeBackendError);
      return v;
    }
    v.tokens += g.tokens + g.prompt_tokens;
    v.reply = g.text;
    if (auto s = parse_judge_score(g.text)) {
      v.score = s;
      v.accepted = *s >= cfg.min_score;
      if (!v.accepted) v.rule = std::string(rule::kJudgeLowScore);
      return v;
    }
  }
  v.rule = std::string(rule::kJudgeUnparseable);
  return v;
}

/// q = 1 iff the full-solution checks all pass, the sample is not a
/// duplicate and the judge accepts.
inline int final_product(const ValidationReport& scv, bool duplicate, bool judge_accept) {
  return (scv.all_passed() ? 1 : 0) * (duplicate ? 0 : 1) * (judge_accept ? 1 : 0);
}

}  // namespace inflight
