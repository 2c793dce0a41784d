#pragma once

#include "inflight/core/decimal.hpp"
#include "inflight/core/random.hpp"
#include "inflight/core/types.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace inflight {

// Abstract stage model: three binary gate outcomes o_1..o_3 (1 = pass),
// independent with P(o_t = 1) = continue_probs[t], and a final quality
// q ~ Bernoulli(quality[pattern]). Pattern bit t-1 holds o_t.
inline constexpr int kPatterns = 1 << kGateCount;

template <class Scalar>
struct StageModel {
  std::array<std::int64_t, kStageCount> delta_costs{};
  std::array<Scalar, kGateCount> continue_probs{};
  std::array<Scalar, kPatterns> quality{};
};

using ExactModel = StageModel<Rational>;
using FloatModel = StageModel<double>;

template <class Scalar>
std::vector<std::string> validate_model(const StageModel<Scalar>& m) {
  std::vector<std::string> v;
  for (int t = 0; t < kStageCount; ++t)
    if (m.delta_costs[t] <= 0) v.push_back("delta cost of stage " + std::to_string(t + 1) + " must be positive");
  for (int t = 0; t < kGateCount; ++t)
    if (m.continue_probs[t] < Scalar(0) || m.continue_probs[t] > Scalar(1))
      v.push_back("continue probability of stage " + std::to_string(t + 1) + " must lie in [0, 1]");
  for (int w = 0; w < kPatterns; ++w)
    if (m.quality[w] < Scalar(0) || m.quality[w] > Scalar(1))
      v.push_back("quality of pattern " + std::to_string(w) + " must lie in [0, 1]");
  return v;
}

inline FloatModel to_float(const ExactModel& m) {
  FloatModel f;
  f.delta_costs = m.delta_costs;
  for (int t = 0; t < kGateCount; ++t) f.continue_probs[t] = static_cast<double>(m.continue_probs[t]);
  for (int w = 0; w < kPatterns; ++w) f.quality[w] = static_cast<double>(m.quality[w]);
  return f;
}

inline bool passed(int pattern, int gate /*1-based*/) { return (pattern >> (gate - 1)) & 1; }

template <class Scalar>
Scalar pattern_probability(const StageModel<Scalar>& m, int pattern) {
  Scalar p(1);
  for (int t = 1; t <= kGateCount; ++t)
    p *= passed(pattern, t) ? m.continue_probs[t - 1] : Scalar(1) - m.continue_probs[t - 1];
  return p;
}

/// Stop stage of the gated pipeline: the first failed gate, else T.
inline int gated_stop(int pattern) {
  for (int t = 1; t <= kGateCount; ++t)
    if (!passed(pattern, t)) return t;
  return kStageCount;
}

inline std::int64_t cost_through(const std::array<std::int64_t, kStageCount>& c, int stop) {
  std::int64_t s = 0;
  for (int t = 0; t < stop; ++t) s += c[t];
  return s;
}

template <class Scalar>
struct SavingsReport {
  Scalar e_cost{0};
  std::int64_t c_full = 0;
  std::array<Scalar, kStageCount> per_stage_terms{};  // Δc_t · P(τ < t)
  std::array<Scalar, kStageCount> stop_cdf{};         // P(τ < t)
  Scalar lower_bound{0};                              // Δc_T · P(τ < T)
  Scalar expected_quality{0};                         // E[q]
  Scalar accepted_quality{0};                         // E[q · 1{τ = T}]
  Scalar objective{0};                                // accepted_quality − λ·e_cost
  // Monte-Carlo only.
  std::int64_t trials = 0;
  double se_e_cost = 0.0;
  double se_objective = 0.0;
  std::array<double, kStageCount> se_stop_cdf{};

  Scalar savings() const { return Scalar(c_full) - e_cost; }
};

/// E[C(τ)] by pattern enumeration, cross-checked against Σ Δc_t·P(τ ≥ t)
/// computed from the survival products. Throws if the routes disagree
/// beyond `tolerance` (relative); use 0 for exact scalars.
template <class Scalar>
SavingsReport<Scalar> exact_expected_cost(const StageModel<Scalar>& m, Scalar lambda = Scalar(0),
                                          double tolerance = 0.0) {
  if (auto v = validate_model(m); !v.empty()) throw std::invalid_argument(v.front());
  SavingsReport<Scalar> r;
  r.c_full = cost_through(m.delta_costs, kStageCount);

  // Route 1: enumerate outcome patterns.
  Scalar by_pattern(0);
  std::array<Scalar, kStageCount + 1> p_stop{};  // P(τ = t), index t
  for (int w = 0; w < kPatterns; ++w) {
    const Scalar pw = pattern_probability(m, w);
    const int tau = gated_stop(w);
    by_pattern += pw * Scalar(cost_through(m.delta_costs, tau));
    p_stop[tau] += pw;
    r.expected_quality += pw * m.quality[w];
    if (tau == kStageCount) r.accepted_quality += pw * m.quality[w];
  }

  // Route 2: survival products.
  Scalar by_survival(0);
  Scalar reach(1);  // P(τ ≥ t)
  for (int t = 1; t <= kStageCount; ++t) {
    by_survival += Scalar(m.delta_costs[t - 1]) * reach;
    r.stop_cdf[t - 1] = Scalar(1) - reach;
    r.per_stage_terms[t - 1] = Scalar(m.delta_costs[t - 1]) * (Scalar(1) - reach);
    if (t <= kGateCount) reach *= m.continue_probs[t - 1];
  }

  auto agree = [&](const Scalar& a, const Scalar& b) {
    Scalar d = a - b;
    if (d < Scalar(0)) d = -d;
    Scalar scale = a < Scalar(0) ? -a : a;
    if (scale < Scalar(1)) scale = Scalar(1);
    return d <= Scalar(tolerance) * scale;
  };
  if (!agree(by_pattern, by_survival))
    throw std::logic_error("expected cost routes disagree");
  // P(τ < t) from the enumerated stop distribution must match too.
  Scalar below(0);
  for (int t = 1; t <= kStageCount; ++t) {
    if (!agree(below, r.stop_cdf[t - 1])) throw std::logic_error("stop distribution routes disagree");
    below += p_stop[t];
  }

  r.e_cost = by_survival;
  r.lower_bound = r.per_stage_terms[kStageCount - 1];
  r.objective = r.accepted_quality - lambda * r.e_cost;
  return r;
}

/// Σ_t per_stage_terms, the right-hand side of the decomposition.
template <class Scalar>
Scalar decomposition_sum(const SavingsReport<Scalar>& r) {
  Scalar s(0);
  for (const auto& x : r.per_stage_terms) s += x;
  return s;
}

inline double mean_se(double sum, double sum_sq, std::int64_t n) {
  if (n < 2) return 0.0;
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
  return std::sqrt(var / static_cast<double>(n));
}

inline constexpr std::int64_t kTrialChunk = 4096;

/// Monte-Carlo estimate of the same quantities. Trials are grouped in
/// fixed chunks with derived seeds, so results depend only on (trials, seed).
inline SavingsReport<double> simulate_expected_cost(const FloatModel& m, std::int64_t trials, std::uint64_t seed,
                                                    double lambda = 0.0) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (auto v = validate_model(m); !v.empty()) throw std::invalid_argument(v.front());
  SavingsReport<double> r;
  r.trials = trials;
  r.c_full = cost_through(m.delta_costs, kStageCount);
  double c_sum = 0, c_sq = 0, j_sum = 0, j_sq = 0, q_sum = 0, aq_sum = 0;
  std::array<std::int64_t, kStageCount + 1> stops{};
  for (std::int64_t chunk = 0; chunk * kTrialChunk < trials; ++chunk) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(chunk)}));
    const std::int64_t n = std::min(kTrialChunk, trials - chunk * kTrialChunk);
    for (std::int64_t i = 0; i < n; ++i) {
      int w = 0;
      for (int t = 1; t <= kGateCount; ++t)
        if (bernoulli(rng, m.continue_probs[t - 1])) w |= 1 << (t - 1);
      const int tau = gated_stop(w);
      const double q = bernoulli(rng, m.quality[w]) ? 1.0 : 0.0;
      const double c = static_cast<double>(cost_through(m.delta_costs, tau));
      const double j = (tau == kStageCount ? q : 0.0) - lambda * c;
      ++stops[tau];
      c_sum += c;
      c_sq += c * c;
      j_sum += j;
      j_sq += j * j;
      q_sum += q;
      aq_sum += tau == kStageCount ? q : 0.0;
    }
  }
  const auto N = static_cast<double>(trials);
  r.e_cost = c_sum / N;
  r.se_e_cost = mean_se(c_sum, c_sq, trials);
  r.objective = j_sum / N;
  r.se_objective = mean_se(j_sum, j_sq, trials);
  r.expected_quality = q_sum / N;
  r.accepted_quality = aq_sum / N;
  std::int64_t below = 0;
  for (int t = 1; t <= kStageCount; ++t) {
    const double p = static_cast<double>(below) / N;
    r.stop_cdf[t - 1] = p;
    r.se_stop_cdf[t - 1] = trials > 1 ? std::sqrt(p * (1 - p) / N) : 0.0;
    r.per_stage_terms[t - 1] = static_cast<double>(m.delta_costs[t - 1]) * p;
    below += stops[t];
  }
  r.lower_bound = r.per_stage_terms[kStageCount - 1];
  return r;
}

// ---------------------------------------------------------------------------
// Optional stopping
// ---------------------------------------------------------------------------

/// A stopping rule as a table from the full outcome pattern to a stop stage
/// in 1..T. Stopping at T means running to completion (M_T = q).
using StoppingRule = std::array<int, kPatterns>;

/// The rule is a stopping time iff {τ = t} depends only on o_1..o_t.
/// Returns a description of the first violation, or empty.
inline std::string measurability_violation(const StoppingRule& rule) {
  for (int w = 0; w < kPatterns; ++w) {
    const int t = rule[w];
    if (t < 1 || t > kStageCount) return "stop stage out of range for pattern " + std::to_string(w);
    if (t == kStageCount) continue;
    const int mask = (1 << t) - 1;
    for (int u = 0; u < kPatterns; ++u)
      if ((u & mask) == (w & mask) && rule[u] != t)
        return "stopping at stage " + std::to_string(t) + " for pattern " + std::to_string(w) +
               " depends on outcomes after stage " + std::to_string(t);
  }
  return {};
}

inline StoppingRule gated_rule() {
  StoppingRule r{};
  for (int w = 0; w < kPatterns; ++w) r[w] = gated_stop(w);
  return r;
}

/// Every measurable stopping rule, found by filtering all 4^8 tables.
inline std::vector<StoppingRule> enumerate_stopping_rules() {
  std::vector<StoppingRule> out;
  const int total = 1 << (2 * kPatterns);
  for (int code = 0; code < total; ++code) {
    StoppingRule r{};
    for (int w = 0; w < kPatterns; ++w) r[w] = ((code >> (2 * w)) & 3) + 1;
    if (measurability_violation(r).empty()) out.push_back(r);
  }
  return out;
}

/// M_t = E[q | o_1..o_t] for the pattern w; t = 0 gives E[q].
template <class Scalar>
Scalar conditional_quality(const StageModel<Scalar>& m, int t, int w) {
  const int mask = (1 << t) - 1;
  Scalar num(0), den(0);
  for (int u = 0; u < kPatterns; ++u) {
    if ((u & mask) != (w & mask)) continue;
    const Scalar pu = pattern_probability(m, u);
    num += pu * m.quality[u];
    den += pu;
  }
  if (den == Scalar(0)) return Scalar(0);
  return num / den;
}

template <class Scalar>
struct MartingaleResult {
  Scalar expected_quality{0};  // E[q]
  Scalar stopped_value{0};     // E[M_τ]
  // Monte-Carlo only.
  std::int64_t trials = 0;
  double se = 0.0;
};

/// Exact E[M_τ] by enumeration. Throws std::invalid_argument for a rule
/// that is not a stopping time.
template <class Scalar>
MartingaleResult<Scalar> martingale_check(const StageModel<Scalar>& m, const StoppingRule& rule) {
  if (auto why = measurability_violation(rule); !why.empty()) throw std::invalid_argument(why);
  MartingaleResult<Scalar> r;
  r.expected_quality = conditional_quality(m, 0, 0);
  for (int w = 0; w < kPatterns; ++w) {
    const int t = rule[w];
    // M_T = q, whose conditional mean given the full pattern is quality[w].
    const Scalar mt = t == kStageCount ? m.quality[w] : conditional_quality(m, t, w);
    r.stopped_value += pattern_probability(m, w) * mt;
  }
  return r;
}

/// Monte-Carlo E[M_τ]: samples patterns and q, evaluates M at the stop.
inline MartingaleResult<double> martingale_check_mc(const FloatModel& m, const StoppingRule& rule,
                                                    std::int64_t trials, std::uint64_t seed) {
  if (auto why = measurability_violation(rule); !why.empty()) throw std::invalid_argument(why);
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::array<std::array<double, kPatterns>, kGateCount + 1> table{};
  for (int t = 0; t <= kGateCount; ++t)
    for (int w = 0; w < kPatterns; ++w) table[t][w] = conditional_quality(m, t, w);
  MartingaleResult<double> r;
  r.trials = trials;
  r.expected_quality = table[0][0];
  double sum = 0, sq = 0;
  for (std::int64_t chunk = 0; chunk * kTrialChunk < trials; ++chunk) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(chunk), 0x4D41ULL}));
    const std::int64_t n = std::min(kTrialChunk, trials - chunk * kTrialChunk);
    for (std::int64_t i = 0; i < n; ++i) {
      int w = 0;
      for (int t = 1; t <= kGateCount; ++t)
        if (bernoulli(rng, m.continue_probs[t - 1])) w |= 1 << (t - 1);
      const double q = bernoulli(rng, m.quality[w]) ? 1.0 : 0.0;
      const int t = rule[w];
      const double v = t == kStageCount ? q : table[t][w];
      sum += v;
      sq += v * v;
    }
  }
  r.stopped_value = sum / static_cast<double>(trials);
  r.se = mean_se(sum, sq, trials);
  return r;
}

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

/// Random valid model with probabilities on a grid of 1/denominator, so the
/// exact and floating versions describe the same model.
inline ExactModel random_exact_model(Rng& rng, bool increasing_costs = false, std::int64_t denominator = 1000) {
  ExactModel m;
  for (auto& c : m.delta_costs) c = uniform_int(rng, 1, 2000);
  if (increasing_costs) {
    std::sort(m.delta_costs.begin(), m.delta_costs.end());
    for (int t = 1; t < kStageCount; ++t)
      if (m.delta_costs[t] <= m.delta_costs[t - 1]) m.delta_costs[t] = m.delta_costs[t - 1] + 1;
  }
  auto prob = [&] { return Rational(uniform_int(rng, 0, denominator), denominator); };
  for (auto& p : m.continue_probs) p = prob();
  for (auto& q : m.quality) q = prob();
  return m;
}

/// Moves probability δ of stopping from S3 to S2, keeping P(τ = T) and
/// P(τ = 1) fixed. Returns nullopt when the shift is infeasible.
template <class Scalar>
std::optional<StageModel<Scalar>> shift_rejection_earlier(const StageModel<Scalar>& m, const Scalar& delta) {
  const Scalar& p1 = m.continue_probs[0];
  const Scalar& p2 = m.continue_probs[1];
  const Scalar& p3 = m.continue_probs[2];
  if (p1 == Scalar(0) || p2 == Scalar(0)) return std::nullopt;
  const Scalar p2n = p2 - delta / p1;
  if (p2n <= Scalar(0) || p2n > Scalar(1)) return std::nullopt;
  const Scalar p3n = p2 * p3 / p2n;
  if (p3n < Scalar(0) || p3n > Scalar(1)) return std::nullopt;
  auto out = m;
  out.continue_probs[1] = p2n;
  out.continue_probs[2] = p3n;
  return out;
}

}  // namespace inflight
