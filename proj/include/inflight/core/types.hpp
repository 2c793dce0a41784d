#pragma once

#include "inflight/core/decimal.hpp"

#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace inflight {

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// The four generation stages. The first three are gated checkpoints; the
/// fourth is final evaluation.
enum class Stage : int {
  Problem = 1,       // S1: problem generation
  MidSolution = 2,   // S2: partial solution up to the cutoff
  FullSolution = 3,  // S3: completed solution
  Evaluation = 4,    // S4: judge + dedup
};

inline constexpr int kStageCount = 4;
inline constexpr int kGateCount = 3;

constexpr int index_of(Stage s) noexcept { return static_cast<int>(s) - 1; }
constexpr Stage stage_at(int one_based) { return static_cast<Stage>(one_based); }

inline std::optional<Stage> stage_from_int(long long v) {
  if (v < 1 || v > kStageCount) return std::nullopt;
  return static_cast<Stage>(v);
}

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Problem: return "S1";
    case Stage::MidSolution: return "S2";
    case Stage::FullSolution: return "S3";
    case Stage::Evaluation: return "S4";
  }
  return "S?";
}

// ---------------------------------------------------------------------------
// Validation reports
// ---------------------------------------------------------------------------

struct RuleOutcome {
  std::string rule_id;
  bool passed = false;
  std::string detail;

  friend bool operator==(const RuleOutcome&, const RuleOutcome&) = default;
};

/// Outcome of one stage validator. `score` is the number of passed checks.
struct ValidationReport {
  Stage stage = Stage::Problem;
  std::vector<RuleOutcome> outcomes;
  int score = 0;

  int check_count() const { return static_cast<int>(outcomes.size()); }
  bool all_passed() const { return score == check_count(); }

  std::vector<std::string> failed_rules() const {
    std::vector<std::string> ids;
    for (const auto& o : outcomes)
      if (!o.passed) ids.push_back(o.rule_id);
    return ids;
  }

  void add(std::string rule_id, bool passed, std::string detail = {}) {
    outcomes.push_back({std::move(rule_id), passed, std::move(detail)});
    if (passed) ++score;
  }

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

// ---------------------------------------------------------------------------
// Cost ledger
// ---------------------------------------------------------------------------

/// Per-stage token increments and the cumulative cost at the stopping stage.
struct CostLedger {
  std::array<std::int64_t, kStageCount> delta_costs{};
  std::optional<Stage> stop_stage;
  std::int64_t cumulative = 0;

  static CostLedger stopped_at(const std::array<std::int64_t, kStageCount>& deltas, Stage stop) {
    CostLedger l;
    l.delta_costs = deltas;
    l.stop_stage = stop;
    for (int t = 0; t <= index_of(stop); ++t) l.cumulative += deltas[t];
    return l;
  }

  std::int64_t full_cost() const {
    return std::accumulate(delta_costs.begin(), delta_costs.end(), std::int64_t{0});
  }

  bool consistent() const {
    std::int64_t sum = 0;
    if (stop_stage)
      for (int t = 0; t <= index_of(*stop_stage); ++t) sum += delta_costs[t];
    for (auto d : delta_costs)
      if (d < 0) return false;
    return sum == cumulative && cumulative <= full_cost();
  }

  friend bool operator==(const CostLedger&, const CostLedger&) = default;
};

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

struct Caps {
  double magnitude_relative = 100.0;
  std::int64_t magnitude_absolute = 10'000'000;
  int word_min = 8;
  int word_max = 100;

  friend bool operator==(const Caps&, const Caps&) = default;
};

/// Gate thresholds and knobs. A trajectory continues past gate t only when
/// its score strictly exceeds thresholds[t].
struct StagePolicy {
  std::array<int, kGateCount> thresholds{5, 5, 5};
  std::array<int, kGateCount> check_counts{6, 6, 6};
  double midsol_cutoff = 0.5;
  double lambda_cost = 1e-4;
  Caps caps;
  std::optional<std::array<std::int64_t, kStageCount>> cost_template;

  bool passes(Stage gate, int score) const { return score > thresholds[index_of(gate)]; }

  friend bool operator==(const StagePolicy&, const StagePolicy&) = default;
};

/// Returns every invariant violation of `policy`; empty means valid.
inline std::vector<std::string> validate_policy(const StagePolicy& policy) {
  std::vector<std::string> v;
  for (int t = 0; t < kGateCount; ++t) {
    const auto name = std::string("stage ") + std::to_string(t + 1);
    if (policy.check_counts[t] < 1) v.push_back(name + ": check count must be >= 1");
    if (policy.thresholds[t] < 0) v.push_back(name + ": threshold must be >= 0");
    if (policy.thresholds[t] >= policy.check_counts[t])
      v.push_back(name + ": unreachable stage (threshold " + std::to_string(policy.thresholds[t]) +
                  " >= check count " + std::to_string(policy.check_counts[t]) + ")");
  }
  if (!(policy.midsol_cutoff > 0.0 && policy.midsol_cutoff <= 1.0))
    v.push_back("midsol_cutoff must lie in (0, 1]");
  if (!(policy.lambda_cost >= 0.0)) v.push_back("lambda_cost must be >= 0");
  if (!(policy.caps.magnitude_relative > 0.0)) v.push_back("caps.magnitude_relative must be > 0");
  if (policy.caps.magnitude_absolute <= 0) v.push_back("caps.magnitude_absolute must be > 0");
  if (policy.caps.word_min < 0 || policy.caps.word_min > policy.caps.word_max)
    v.push_back("caps.word_min must satisfy 0 <= word_min <= word_max");
  if (policy.cost_template) {
    const auto& c = *policy.cost_template;
    if (c[0] <= 0) v.push_back("cost template: delta costs must be positive");
    for (int t = 1; t < kStageCount; ++t)
      if (c[t] <= c[t - 1]) {
        v.push_back("cost template: delta costs must be strictly increasing");
        break;
      }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

struct StageOutput {
  Stage stage = Stage::Problem;
  std::string text;
  std::int64_t tokens = 0;

  friend bool operator==(const StageOutput&, const StageOutput&) = default;
};

struct InFlight {
  friend bool operator==(const InFlight&, const InFlight&) = default;
};
struct Accepted {
  friend bool operator==(const Accepted&, const Accepted&) = default;
};
struct RejectedAt {
  Stage stage = Stage::Problem;
  std::vector<std::string> rule_ids;
  friend bool operator==(const RejectedAt&, const RejectedAt&) = default;
};

using TrajectoryStatus = std::variant<InFlight, RejectedAt, Accepted>;

/// One prompt's path through the stages. `gated` is false for full-generation
/// baseline runs, which keep generating after a failed gate and record the
/// first failing gate in `would_reject_at`.
struct Trajectory {
  std::uint64_t id = 0;
  std::string prompt;
  std::vector<StageOutput> stage_outputs;
  TrajectoryStatus status = InFlight{};
  std::uint64_t seed = 0;
  std::vector<ValidationReport> reports;
  bool gated = true;
  std::optional<Stage> would_reject_at;
  std::optional<bool> oracle_label;
  CostLedger ledger;

  bool accepted() const { return std::holds_alternative<Accepted>(status); }
  const RejectedAt* rejection() const { return std::get_if<RejectedAt>(&status); }

  const StageOutput* output(Stage s) const {
    for (const auto& o : stage_outputs)
      if (o.stage == s) return &o;
    return nullptr;
  }
  const ValidationReport* report(Stage s) const {
    for (const auto& r : reports)
      if (r.stage == s) return &r;
    return nullptr;
  }

  std::int64_t recorded_tokens() const {
    std::int64_t sum = 0;
    for (const auto& o : stage_outputs) sum += o.tokens;
    return sum;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

enum class Tier { Easy, Medium, Hard };

inline const char* tier_name(Tier t) {
  switch (t) {
    case Tier::Easy: return "easy";
    case Tier::Medium: return "medium";
    case Tier::Hard: return "hard";
  }
  return "?";
}

struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// easy: [1, 50), medium: [50, 500), hard: [500, 2000].
inline Tier bin_difficulty(double d) {
  if (!(d >= 1.0 && d <= 2000.0))
    throw RangeError("difficulty scalar " + std::to_string(d) + " outside [1, 2000]");
  if (d < 50.0) return Tier::Easy;
  if (d < 500.0) return Tier::Medium;
  return Tier::Hard;
}

struct SampleRecord {
  std::uint64_t id = 0;
  std::string problem;
  std::string solution;
  Decimal final_answer;
  std::optional<Tier> tier;
  std::optional<double> difficulty_scalar;
  std::optional<int> judge_score;
  std::vector<std::uint64_t> minhash_signature;
  CostLedger ledger;

  friend bool operator==(const SampleRecord& a, const SampleRecord& b) {
    return a.id == b.id && a.problem == b.problem && a.solution == b.solution &&
           a.final_answer == b.final_answer && a.final_answer.text() == b.final_answer.text() &&
           a.tier == b.tier && a.difficulty_scalar == b.difficulty_scalar &&
           a.judge_score == b.judge_score && a.minhash_signature == b.minhash_signature &&
           a.ledger == b.ledger;
  }
};

}  // namespace inflight
