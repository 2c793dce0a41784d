#pragma once

#include "inflight/analytics/theory.hpp"
#include "inflight/core/log.hpp"
#include "inflight/core/types.hpp"
#include "inflight/validators/validators.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace inflight {

struct LogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Good/Bad label of a logged trajectory: the backend's ground truth when
/// recorded, else the final outcome of a completed trajectory.
inline std::optional<bool> quality_label(const Trajectory& t) {
  if (t.oracle_label) return t.oracle_label;
  if (t.accepted()) return true;
  if (const auto* r = t.rejection(); r && r->stage == Stage::Evaluation) return false;
  return std::nullopt;
}

/// Stop stage and cost a trajectory has (gated) or would have had (ungated).
inline Stage effective_stop(const Trajectory& t) {
  if (t.gated) return t.ledger.stop_stage.value_or(Stage::Evaluation);
  return t.would_reject_at.value_or(Stage::Evaluation);
}

inline std::int64_t effective_cost(const Trajectory& t) {
  return cost_through(t.ledger.delta_costs, static_cast<int>(effective_stop(t)));
}

/// Gate scores of an ungated trajectory, recomputed from its stored texts.
struct ReplayedGates {
  std::array<int, kGateCount> scores{};
  std::optional<Stage> would_reject_at;
};

inline ReplayedGates replay_gates(const Trajectory& t, const StagePolicy& policy, const RuleConfig& rules) {
  ReplayedGates g;
  const auto* s1 = t.output(Stage::Problem);
  const auto* s2 = t.output(Stage::MidSolution);
  const auto* s3 = t.output(Stage::FullSolution);
  if (!s1 || !s2 || !s3) throw LogError("trajectory " + std::to_string(t.id) + " lacks full generations");
  g.scores[0] = wpe_validate(s1->text, rules).score;
  g.scores[1] = rta_validate(s1->text, s2->text, rules).score;
  g.scores[2] = scv_validate(s1->text, s3->text, rules).score;
  for (int i = 0; i < kGateCount; ++i)
    if (!policy.passes(stage_at(i + 1), g.scores[i])) {
      g.would_reject_at = stage_at(i + 1);
      break;
    }
  return g;
}

inline void require_ungated(const std::vector<Trajectory>& log) {
  for (const auto& t : log)
    if (t.gated)
      throw LogError("replay needs full generations; trajectory " + std::to_string(t.id) +
                     " comes from a gated run (use --no-gating)");
}

/// Savings of gating measured on a log of full generations: every
/// trajectory is replayed through the gates and charged up to its stop.
struct LogSavings {
  std::int64_t n = 0;
  std::int64_t full_tokens = 0;   // Σ C_full,i
  std::int64_t gated_tokens = 0;  // Σ C_i(τ_i)
  std::array<std::int64_t, kStageCount> per_stage_terms{};  // Σ Δc_{t,i}·1{τ_i < t}
  std::array<std::int64_t, kStageCount> stopped_before{};   // #{τ_i < t}

  double savings_fraction() const {
    return full_tokens ? 1.0 - static_cast<double>(gated_tokens) / static_cast<double>(full_tokens) : 0.0;
  }
  double mean_full() const { return n ? static_cast<double>(full_tokens) / static_cast<double>(n) : 0.0; }
  double mean_gated() const { return n ? static_cast<double>(gated_tokens) / static_cast<double>(n) : 0.0; }
  std::int64_t lower_bound() const { return per_stage_terms[kStageCount - 1]; }
};

inline LogSavings replay_savings(const std::vector<Trajectory>& log, const StagePolicy& policy,
                                 const RuleConfig& rules = {}) {
  require_ungated(log);
  LogSavings s;
  for (const auto& t : log) {
    const auto gates = replay_gates(t, policy, rules);
    const int tau = static_cast<int>(gates.would_reject_at.value_or(Stage::Evaluation));
    ++s.n;
    s.full_tokens += t.ledger.full_cost();
    s.gated_tokens += cost_through(t.ledger.delta_costs, tau);
    for (int st = 1; st <= kStageCount; ++st)
      if (tau < st) {
        s.per_stage_terms[st - 1] += t.ledger.delta_costs[st - 1];
        ++s.stopped_before[st - 1];
      }
  }
  return s;
}

/// Oracle false-positive / false-negative table for one benchmark.
struct FpFnRow {
  std::string name;
  std::int64_t good = 0, bad = 0;
  std::int64_t false_positives = 0;  // Good, rejected at S1-S3
  std::int64_t false_negatives = 0;  // Bad, passed S1-S3
  double fpr() const { return good ? static_cast<double>(false_positives) / static_cast<double>(good) : 0.0; }
  double fnr() const { return bad ? static_cast<double>(false_negatives) / static_cast<double>(bad) : 0.0; }
};

inline FpFnRow fpfn_oracle_replay(const std::vector<Trajectory>& log, const StagePolicy& policy,
                                  const RuleConfig& rules = {}, std::string name = "run") {
  require_ungated(log);
  FpFnRow row;
  row.name = std::move(name);
  for (const auto& t : log) {
    const auto label = quality_label(t);
    if (!label) throw LogError("trajectory " + std::to_string(t.id) + " has no Good/Bad label");
    const bool early = replay_gates(t, policy, rules).would_reject_at.has_value();
    if (*label) {
      ++row.good;
      row.false_positives += early;
    } else {
      ++row.bad;
      row.false_negatives += !early;
    }
  }
  return row;
}

inline FpFnRow invert_labels(FpFnRow r) {
  // Swapping Good/Bad turns rejected-Good into rejected-Bad and vice versa.
  FpFnRow s;
  s.name = r.name;
  s.good = r.bad;
  s.bad = r.good;
  s.false_positives = r.bad - r.false_negatives;
  s.false_negatives = r.good - r.false_positives;
  return s;
}

// ---------------------------------------------------------------------------
// Surrogate monotonicity
// ---------------------------------------------------------------------------

struct ScoreBucket {
  int score = 0;
  std::int64_t n = 0;
  std::int64_t good = 0;
  double phi() const { return n ? static_cast<double>(good) / static_cast<double>(n) : 0.0; }
  /// Agresti–Coull variance of the bucket mean.
  double variance() const {
    const double nt = static_cast<double>(n) + 4.0;
    const double pt = (static_cast<double>(good) + 2.0) / nt;
    return pt * (1.0 - pt) / nt;
  }
};

struct MonotonicityViolation {
  Stage stage = Stage::Problem;
  int lower_score = 0, higher_score = 0;
  double phi_lower = 0, phi_higher = 0, margin = 0;
};

struct MonotonicityReport {
  std::array<std::vector<ScoreBucket>, kGateCount> tables;  // non-empty buckets, ascending score
  std::vector<MonotonicityViolation> violations;
  std::vector<std::string> notices;
};

/// φ̂_t(s) = mean quality label among trajectories scoring s at gate t.
/// Adjacent non-empty buckets are compared; a drop larger than
/// `z` standard errors is a violation.
inline MonotonicityReport surrogate_monotonicity(const std::vector<Trajectory>& log, double z = 4.0) {
  MonotonicityReport rep;
  std::array<std::vector<ScoreBucket>, kGateCount> all;
  for (auto& v : all) v.resize(1);
  for (const auto& t : log) {
    const auto label = quality_label(t);
    if (!label) throw LogError("trajectory " + std::to_string(t.id) + " has no Good/Bad label");
    for (const auto& r : t.reports) {
      if (r.stage == Stage::Evaluation) continue;
      auto& buckets = all[static_cast<std::size_t>(index_of(r.stage))];
      if (static_cast<std::size_t>(r.score) >= buckets.size()) buckets.resize(static_cast<std::size_t>(r.score) + 1);
      auto& b = buckets[static_cast<std::size_t>(r.score)];
      b.score = r.score;
      ++b.n;
      b.good += *label;
    }
  }
  for (int g = 0; g < kGateCount; ++g) {
    for (std::size_t s = 0; s < all[g].size(); ++s) {
      if (all[g][s].n == 0) {
        rep.notices.push_back(std::string(stage_name(stage_at(g + 1))) + ": no trajectories with score " +
                              std::to_string(s) + ", skipped");
        continue;
      }
      all[g][s].score = static_cast<int>(s);
      rep.tables[g].push_back(all[g][s]);
    }
    const auto& tab = rep.tables[g];
    for (std::size_t i = 1; i < tab.size(); ++i) {
      const auto& lo = tab[i - 1];
      const auto& hi = tab[i];
      const double margin = z * std::sqrt(lo.variance() + hi.variance());
      if (hi.phi() < lo.phi() - margin)
        rep.violations.push_back({stage_at(g + 1), lo.score, hi.score, lo.phi(), hi.phi(), margin});
    }
  }
  for (const auto& n : rep.notices) log::info(n);
  return rep;
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

/// Ĵ = mean[q·1{τ = T}] − λ·mean[C(τ)], with q the final-stage outcome
/// (accepted after judge and dedup).
inline double objective_value(const std::vector<Trajectory>& log, double lambda) {
  if (log.empty()) throw LogError("empty log");
  double reward = 0, cost = 0;
  for (const auto& t : log) {
    if (effective_stop(t) == Stage::Evaluation && t.accepted()) reward += 1.0;
    cost += static_cast<double>(effective_cost(t));
  }
  const auto n = static_cast<double>(log.size());
  return reward / n - lambda * cost / n;
}

/// Stage model estimated from an ungated log: conditional pass rates and
/// the mean label per outcome pattern (overall mean where a pattern is
/// unobserved).
inline FloatModel estimate_stage_model(const std::vector<Trajectory>& log, const StagePolicy& policy,
                                       const RuleConfig& rules = {}) {
  require_ungated(log);
  FloatModel m;
  std::array<double, kStageCount> cost_sum{};
  std::array<std::int64_t, kGateCount> reach{}, pass{};
  std::array<double, kPatterns> good{}, count{};
  double all_good = 0;
  for (const auto& t : log) {
    const auto g = replay_gates(t, policy, rules);
    int w = 0;
    for (int i = 0; i < kGateCount; ++i)
      if (policy.passes(stage_at(i + 1), g.scores[i])) w |= 1 << i;
    const bool label = quality_label(t).value_or(false);
    for (int i = 0; i < kGateCount; ++i) {
      ++reach[i];
      pass[i] += (w >> i) & 1;
    }
    count[w] += 1;
    good[w] += label;
    all_good += label;
    for (int s = 0; s < kStageCount; ++s) cost_sum[s] += static_cast<double>(t.ledger.delta_costs[s]);
  }
  const auto n = static_cast<double>(std::max<std::size_t>(log.size(), 1));
  for (int s = 0; s < kStageCount; ++s)
    m.delta_costs[s] = std::max<std::int64_t>(1, std::llround(cost_sum[s] / n));
  for (int i = 0; i < kGateCount; ++i)
    m.continue_probs[i] = reach[i] ? static_cast<double>(pass[i]) / static_cast<double>(reach[i]) : 1.0;
  for (int w = 0; w < kPatterns; ++w) m.quality[w] = count[w] > 0 ? good[w] / count[w] : all_good / n;
  return m;
}

}  // namespace inflight
