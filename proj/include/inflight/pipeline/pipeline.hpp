#pragma once

#include "inflight/core/log.hpp"
#include "inflight/core/random.hpp"
#include "inflight/core/types.hpp"
#include "inflight/dedup/judge.hpp"
#include "inflight/dedup/minhash.hpp"
#include "inflight/generators/backend.hpp"
#include "inflight/validators/validators.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace inflight {

struct PromptItem {
  std::string text;
  std::optional<double> difficulty;
  friend bool operator==(const PromptItem&, const PromptItem&) = default;
};

struct PipelineRun {
  StagePolicy policy;
  int batch_size = 64;
  std::int64_t target_accepted = 100;
  std::uint64_t seed = 42;
  double sampling_mix = 0.30;  // fraction of prompts sent with few-shot exemplars
  int few_shot_k = 2;
  bool gating = true;
  double problem_temperature = 0.7;
  double solution_temperature = 0.0;
  std::int64_t length_bootstrap = 400;  // initial expected solution length
  std::int64_t max_problem_tokens = 256;
  std::int64_t max_solution_tokens = 4096;
  int threads = 1;

  friend bool operator==(const PipelineRun&, const PipelineRun&) = default;
};

inline std::vector<std::string> validate_run(const PipelineRun& r) {
  std::vector<std::string> v = validate_policy(r.policy);
  if (r.batch_size < 1) v.push_back("batch_size must be >= 1");
  if (r.target_accepted < 1) v.push_back("target_accepted must be >= 1");
  if (!(r.sampling_mix >= 0.0 && r.sampling_mix <= 1.0)) v.push_back("sampling_mix must lie in [0, 1]");
  if (r.few_shot_k < 1) v.push_back("few_shot_k must be >= 1");
  if (r.length_bootstrap < 1) v.push_back("length_bootstrap must be >= 1");
  if (r.max_problem_tokens < 1) v.push_back("max_problem_tokens must be >= 1");
  if (r.max_solution_tokens < 2) v.push_back("max_solution_tokens must be >= 2");
  if (r.threads < 1) v.push_back("threads must be >= 1");
  if (!(r.problem_temperature >= 0.0) || !(r.solution_temperature >= 0.0))
    v.push_back("temperatures must be >= 0");
  return v;
}

/// Validator, judge and dedup settings shared by every trajectory of a run.
struct EvalContext {
  RuleConfig rules;
  JudgeConfig judge;
  MinHashParams dedup;
};

struct TrajectoryOptions {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;
  bool gated = true;
  double expected_length = 400.0;
  double problem_temperature = 0.7;
  double solution_temperature = 0.0;
  std::int64_t max_problem_tokens = 256;
  std::int64_t max_solution_tokens = 4096;
  std::optional<double> difficulty;
};

inline TrajectoryOptions options_for(const PipelineRun& run, std::uint64_t index, double expected_length) {
  TrajectoryOptions o;
  o.id = index;
  o.seed = derive_seed(run.seed, {index});
  o.gated = run.gating;
  o.expected_length = expected_length;
  o.problem_temperature = run.problem_temperature;
  o.solution_temperature = run.solution_temperature;
  o.max_problem_tokens = run.max_problem_tokens;
  o.max_solution_tokens = run.max_solution_tokens;
  return o;
}

inline std::string problem_system_prompt() {
  return "Write one grade-school math word problem. Reply with the problem text only.";
}

inline std::string solution_system_prompt(const RuleConfig& rules) {
  return "Solve the math word problem step by step. Show each calculation as an equation. "
         "Finish with a final line of the form '" + rules.final_marker + " <answer>'.";
}

/// Prefix of `text` covering roughly `fraction` of its characters, cut at a
/// whitespace boundary.
inline std::string split_at_fraction(const std::string& text, double fraction) {
  if (fraction >= 1.0) return text;
  auto cut = static_cast<std::size_t>(std::floor(std::max(0.0, fraction) * static_cast<double>(text.size())));
  while (cut > 0 && !text::is_space(text[cut])) --cut;
  while (cut > 0 && text::is_space(text[cut - 1])) --cut;
  return text.substr(0, cut);
}

/// State of a trajectory after S1-S3 and the judge call, before dedup.
struct PendingTrajectory {
  Trajectory trajectory;
  std::array<std::int64_t, kStageCount> deltas{};
  std::optional<Stage> stopped;  // set when the trajectory already ended
  std::optional<ValidationReport> scv;
  std::optional<JudgeVerdict> verdict;
  std::string problem;
  std::string solution;
  bool backend_unreachable = false;
};

struct TrajectoryResult {
  std::optional<SampleRecord> sample;
  Trajectory trajectory;
};

namespace detail {

inline void end_at(PendingTrajectory& p, Stage s, std::vector<std::string> rules) {
  p.stopped = s;
  p.trajectory.status = RejectedAt{s, std::move(rules)};
  p.trajectory.ledger = CostLedger::stopped_at(p.deltas, s);
}

inline std::uint64_t stage_seed(std::uint64_t trajectory_seed, Stage s) {
  return derive_seed(trajectory_seed, {static_cast<std::uint64_t>(s)});
}

}  // namespace detail

/// Runs S1-S3 and the judge. Gated trajectories stop at the first gate whose
/// score does not strictly exceed its threshold; ungated ones run to the end
/// and remember the first such gate. Safe to call concurrently.
inline PendingTrajectory advance_trajectory(const std::string& prompt, GeneratorBackend& backend,
                                            const StagePolicy& policy, const EvalContext& ctx,
                                            const TrajectoryOptions& opt) {
  PendingTrajectory p;
  Trajectory& t = p.trajectory;
  t.id = opt.id;
  t.prompt = prompt;
  t.seed = opt.seed;
  t.gated = opt.gated;
  t.oracle_label = backend.ground_truth(opt.seed);

  auto gate = [&](Stage s, ValidationReport report) -> bool {
    const bool pass = policy.passes(s, report.score);
    auto failed = report.failed_rules();
    t.reports.push_back(std::move(report));
    if (pass) return true;
    if (!t.would_reject_at) t.would_reject_at = s;
    if (!opt.gated) return true;
    detail::end_at(p, s, std::move(failed));
    return false;
  };
  auto backend_failure = [&](Stage s, const BackendError& e) {
    log::warning(std::string("trajectory ") + std::to_string(opt.id) + ": backend error at " + stage_name(s) +
                 ": " + e.what());
    p.backend_unreachable = e.unreachable;
    detail::end_at(p, s, {std::string(rule::kBackendError)});
    return p;
  };

  // S1: problem.
  GenerationRequest req;
  req.trajectory_seed = opt.seed;
  req.stage = Stage::Problem;
  req.system = problem_system_prompt();
  req.user = prompt;
  req.params = {opt.problem_temperature, opt.max_problem_tokens, {}};
  req.seed = detail::stage_seed(opt.seed, Stage::Problem);
  Generation g1;
  try {
    g1 = checked(backend.generate(req));
  } catch (const BackendError& e) {
    return backend_failure(Stage::Problem, e);
  }
  p.problem = text::trim(g1.text);
  p.deltas[0] = g1.tokens;
  t.stage_outputs.push_back({Stage::Problem, p.problem, g1.tokens});
  if (!gate(Stage::Problem, wpe_validate(p.problem, ctx.rules))) return p;

  // S2: partial solution up to the cutoff.
  const bool continuation = backend.capabilities().supports_continuation;
  const bool whole_at_s2 = policy.midsol_cutoff >= 1.0 || !continuation;
  std::int64_t budget = opt.max_solution_tokens;
  if (!whole_at_s2)
    budget = std::clamp<std::int64_t>(std::llround(policy.midsol_cutoff * opt.expected_length), 1,
                                      opt.max_solution_tokens - 1);
  req.stage = Stage::MidSolution;
  req.system = solution_system_prompt(ctx.rules);
  req.user = p.problem;
  req.params = {opt.solution_temperature, budget, {}};
  req.seed = detail::stage_seed(opt.seed, Stage::MidSolution);
  Generation g2;
  try {
    g2 = checked(backend.generate(req));
  } catch (const BackendError& e) {
    return backend_failure(Stage::MidSolution, e);
  }
  std::string partial = g2.text;
  bool complete = g2.finished || whole_at_s2;
  if (!continuation && policy.midsol_cutoff < 1.0) {
    // Whole solution generated in one shot; validate the cutoff prefix only.
    log::info("backend cannot continue a prefix; splitting a single-shot solution at the cutoff");
    const double frac = policy.midsol_cutoff * opt.expected_length / static_cast<double>(g2.tokens);
    partial = split_at_fraction(g2.text, frac);
  }
  p.deltas[1] = g2.tokens;
  t.stage_outputs.push_back({Stage::MidSolution, partial, g2.tokens});
  if (!gate(Stage::MidSolution, rta_validate(p.problem, partial, ctx.rules))) return p;

  // S3: the rest of the solution, continuing the S2 text.
  std::int64_t s3_tokens = 0;
  p.solution = g2.text;
  if (!complete) {
    req.stage = Stage::FullSolution;
    req.assistant_prefix = g2.text;
    req.params.max_tokens = std::max<std::int64_t>(opt.max_solution_tokens - g2.tokens, 1);
    req.seed = detail::stage_seed(opt.seed, Stage::FullSolution);
    Generation g3;
    try {
      g3 = checked(backend.generate(req));
    } catch (const BackendError& e) {
      return backend_failure(Stage::FullSolution, e);
    }
    p.solution = g2.text + g3.text;
    s3_tokens = g3.tokens;
  }
  p.deltas[2] = s3_tokens;
  t.stage_outputs.push_back({Stage::FullSolution, p.solution, s3_tokens});
  auto scv = scv_validate(p.problem, p.solution, ctx.rules);
  p.scv = scv;
  if (!gate(Stage::FullSolution, std::move(scv))) return p;

  // S4: judge. Dedup happens at finalization, in submission order.
  auto verdict = judge_sample(p.problem, p.solution, backend, ctx.judge, opt.seed,
                              detail::stage_seed(opt.seed, Stage::Evaluation));
  p.deltas[3] = verdict.tokens;
  t.stage_outputs.push_back({Stage::Evaluation, verdict.reply, verdict.tokens});
  p.verdict = std::move(verdict);
  return p;
}

/// Completes S4: dedup against `index` (skipped when null), the final
/// product, status, ledger and the sample record. Call in submission order.
inline TrajectoryResult finalize_trajectory(PendingTrajectory p, MinHashIndex* index,
                                            std::optional<double> difficulty = std::nullopt) {
  TrajectoryResult out;
  Trajectory& t = p.trajectory;
  if (p.stopped) {
    out.trajectory = std::move(t);
    return out;
  }

  const JudgeVerdict& v = *p.verdict;
  ValidationReport eval;
  eval.stage = Stage::Evaluation;
  if (!v.accepted && v.rule != rule::kJudgeLowScore)
    eval.add(v.rule, false, "");
  else
    eval.add(std::string(rule::kJudgeLowScore), v.accepted, v.score ? "score " + std::to_string(*v.score) : "");

  bool duplicate = false;
  Signature sig;
  if (index && p.scv->all_passed() && v.accepted) {
    try {
      sig = minhash_signature(p.problem + "\n" + p.solution, index->params());
      duplicate = index->is_duplicate(sig, t.id);
      eval.add(std::string(rule::kDuplicate), !duplicate);
    } catch (const DegenerateText&) {
      duplicate = true;
      eval.add(std::string(rule::kDegenerate), false, "text shorter than one shingle");
    }
  }
  const int q = final_product(*p.scv, duplicate, v.accepted);
  std::vector<std::string> failed = p.scv->failed_rules();
  for (auto& r : eval.failed_rules()) failed.push_back(std::move(r));
  t.reports.push_back(std::move(eval));

  t.ledger = CostLedger::stopped_at(p.deltas, Stage::Evaluation);
  if (q == 1) {
    t.status = Accepted{};
    SampleRecord s;
    s.id = t.id;
    s.problem = p.problem;
    s.solution = p.solution;
    s.final_answer = extract_final_answer(p.solution).value_or(Decimal{});
    s.difficulty_scalar = difficulty;
    if (difficulty) s.tier = bin_difficulty(*difficulty);
    s.judge_score = v.score;
    s.minhash_signature = std::move(sig);
    s.ledger = t.ledger;
    out.sample = std::move(s);
  } else {
    t.status = RejectedAt{Stage::Evaluation, std::move(failed)};
  }
  out.trajectory = std::move(t);
  return out;
}

/// One prompt through all stages.
inline TrajectoryResult run_msifr(const std::string& prompt, GeneratorBackend& backend, const StagePolicy& policy,
                                  const EvalContext& ctx = {}, const TrajectoryOptions& opt = {},
                                  MinHashIndex* index = nullptr) {
  return finalize_trajectory(advance_trajectory(prompt, backend, policy, ctx, opt), index, opt.difficulty);
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void trajectory(const Trajectory& t) = 0;
  virtual void sample(const SampleRecord& s) = 0;
};

class MemorySink final : public RecordSink {
 public:
  void trajectory(const Trajectory& t) override {
    std::lock_guard lock(mu_);
    trajectories.push_back(t);
  }
  void sample(const SampleRecord& s) override {
    std::lock_guard lock(mu_);
    samples.push_back(s);
  }
  std::vector<Trajectory> trajectories;
  std::vector<SampleRecord> samples;

 private:
  std::mutex mu_;
};

struct RunSummary {
  std::int64_t prompts_processed = 0;
  std::int64_t accepted = 0;
  std::array<std::int64_t, kStageCount> rejected_by_stage{};
  std::array<std::int64_t, kStageCount> tokens_by_stage{};
  std::int64_t total_tokens = 0;
  std::int64_t backend_errors = 0;
  double final_expected_length = 0.0;
  bool target_reached = false;
  bool aborted = false;
  bool backend_unreachable = false;
  std::string error;
  double wall_seconds = 0.0;

  double acceptance_rate() const {
    return prompts_processed ? static_cast<double>(accepted) / static_cast<double>(prompts_processed) : 0.0;
  }
  double mean_cost() const {
    return prompts_processed ? static_cast<double>(total_tokens) / static_cast<double>(prompts_processed) : 0.0;
  }
  double pairs_per_hour() const {
    return wall_seconds > 0 ? static_cast<double>(accepted) * 3600.0 / wall_seconds : 0.0;
  }
  double tokens_per_second() const {
    return wall_seconds > 0 ? static_cast<double>(total_tokens) / wall_seconds : 0.0;
  }
};

/// User message for prompt `index`: a share of prompts (sampling_mix) get
/// few_shot_k exemplars drawn uniformly under the run seed.
inline std::string compose_prompt(const PipelineRun& run, std::uint64_t index, const std::string& prompt,
                                  const std::vector<std::string>& exemplars) {
  if (exemplars.empty()) return prompt;
  Rng rng(derive_seed(run.seed, {index, 0xF5F5ULL}));
  if (!bernoulli(rng, run.sampling_mix)) return prompt;
  std::vector<std::size_t> order(exemplars.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(run.few_shot_k), order.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(i),
                                                        static_cast<std::int64_t>(order.size() - 1)));
    std::swap(order[i], order[j]);
  }
  std::string out = "Here are examples of the kind of problem to write:\n";
  for (std::size_t i = 0; i < k; ++i) out += "Example: " + exemplars[order[i]] + "\n";
  return out + "\n" + prompt;
}

/// Drives prompts through the stages until `target_accepted` samples are
/// accepted or the prompts run out. Trajectories in a chunk run
/// concurrently; dedup, sink writes and the expected-length update happen
/// in prompt order between chunks, so results do not depend on threading.
inline RunSummary run_batch(const PipelineRun& run, const std::vector<PromptItem>& prompts, GeneratorBackend& backend,
                            RecordSink& sink, const EvalContext& ctx, MinHashIndex& index,
                            const std::vector<std::string>& exemplars = {}) {
  RunSummary summary;
  const auto started = std::chrono::steady_clock::now();
  if (!backend.capabilities().supports_continuation && run.policy.midsol_cutoff < 1.0)
    log::notice("backend cannot continue a prefix: solutions are generated in one shot and split at the "
                "cutoff for validation; full solution tokens are charged at S2");

  double length_sum = 0.0;
  std::int64_t length_count = 0;
  auto expected_length = [&] {
    return length_count ? length_sum / static_cast<double>(length_count) : static_cast<double>(run.length_bootstrap);
  };

  std::size_t next = 0;
  while (summary.accepted < run.target_accepted && next < prompts.size()) {
    const std::size_t chunk = std::min<std::size_t>(
        {static_cast<std::size_t>(run.batch_size), static_cast<std::size_t>(run.target_accepted - summary.accepted),
         prompts.size() - next});
    const double lhat = expected_length();
    std::vector<std::optional<PendingTrajectory>> pending(chunk);

    auto work = [&](std::size_t i) {
      const auto idx = static_cast<std::uint64_t>(next + i);
      auto opt = options_for(run, idx, lhat);
      pending[i] = advance_trajectory(compose_prompt(run, idx, prompts[next + i].text, exemplars), backend,
                                      run.policy, ctx, opt);
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(run.threads), chunk);
    if (workers <= 1) {
      for (std::size_t i = 0; i < chunk; ++i) work(i);
    } else {
      std::atomic<std::size_t> cursor{0};
      std::exception_ptr failure;
      std::mutex failure_mu;
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t i; (i = cursor.fetch_add(1)) < chunk;) {
            try {
              work(i);
            } catch (...) {
              std::lock_guard lock(failure_mu);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      for (auto& th : pool) th.join();
      if (failure) std::rethrow_exception(failure);
    }

    std::size_t unreachable = 0;
    for (std::size_t i = 0; i < chunk; ++i) {
      auto& p = *pending[i];
      if (p.backend_unreachable) ++unreachable;
      auto result = finalize_trajectory(std::move(p), &index, prompts[next + i].difficulty);
      const auto& t = result.trajectory;
      ++summary.prompts_processed;
      for (int s = 0; s < kStageCount; ++s) summary.tokens_by_stage[s] += t.ledger.delta_costs[s];
      summary.total_tokens += t.ledger.cumulative;
      if (const auto* r = t.rejection()) {
        ++summary.rejected_by_stage[index_of(r->stage)];
        if (std::find(r->rule_ids.begin(), r->rule_ids.end(), rule::kBackendError) != r->rule_ids.end())
          ++summary.backend_errors;
      }
      try {
        sink.trajectory(t);
        if (result.sample) sink.sample(*result.sample);
      } catch (const std::exception& e) {
        summary.aborted = true;
        summary.error = std::string("sink write failed: ") + e.what();
        summary.final_expected_length = expected_length();
        summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return summary;
      }
      if (result.sample) {
        ++summary.accepted;
        length_sum += static_cast<double>(t.ledger.delta_costs[1] + t.ledger.delta_costs[2]);
        ++length_count;
      }
    }
    next += chunk;
    if (unreachable == chunk) {
      summary.aborted = true;
      summary.backend_unreachable = true;
      summary.error = "backend unreachable";
      break;
    }
  }
  summary.target_reached = summary.accepted >= run.target_accepted;
  summary.final_expected_length = expected_length();
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return summary;
}

}  // namespace inflight
