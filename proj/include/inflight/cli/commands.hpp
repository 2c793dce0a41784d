#pragma once

#include "inflight/analytics/replay.hpp"
#include "inflight/analytics/theory.hpp"
#include "inflight/cli/config.hpp"
#include "inflight/cli/records.hpp"

#include <charconv>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <ostream>

namespace inflight {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitUnreachable = 3 };

inline std::unique_ptr<GeneratorBackend> make_backend(const RunConfig& cfg) {
  if (cfg.backend == BackendKind::Sim) return std::make_unique<SimulatedBackend>(cfg.simulator);
  if (!std::getenv(cfg.http.api_key_env.c_str()))
    log::notice("environment variable " + cfg.http.api_key_env + " is not set; sending requests without a token");
  return std::make_unique<HttpBackend>(cfg.http);
}

namespace detail {

inline std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string percent(double fraction, int digits = 2) { return fixed(100.0 * fraction, digits) + "%"; }

inline void print_problems(std::ostream& err, const std::vector<std::string>& problems) {
  err << "invalid configuration:\n";
  for (const auto& p : problems) err << "  - " << p << "\n";
}

}  // namespace detail

inline json summary_to_json(const RunSummary& s) {
  return json{{"prompts_processed", s.prompts_processed},
              {"accepted", s.accepted},
              {"rejected_by_stage", s.rejected_by_stage},
              {"tokens_by_stage", s.tokens_by_stage},
              {"total_tokens", s.total_tokens},
              {"mean_cost", s.mean_cost()},
              {"backend_errors", s.backend_errors},
              {"final_expected_length", s.final_expected_length},
              {"target_reached", s.target_reached},
              {"aborted", s.aborted},
              {"backend_unreachable", s.backend_unreachable},
              {"error", s.error}};
}

inline void print_summary(std::ostream& out, const RunSummary& s, bool gating) {
  out << "run summary (" << (gating ? "gated" : "no gating, full generation") << ")\n";
  out << "  prompts processed   " << s.prompts_processed << "\n";
  out << "  accepted            " << s.accepted << " (" << detail::percent(s.acceptance_rate()) << ")\n";
  out << "  target reached      " << (s.target_reached ? "yes" : "no") << "\n";
  out << "  total tokens        " << s.total_tokens << "\n";
  out << "  mean tokens/prompt  " << detail::fixed(s.mean_cost(), 1) << "\n";
  out << "  stage   tokens      rejected\n";
  for (int t = 0; t < kStageCount; ++t)
    out << "  " << stage_name(stage_at(t + 1)) << "      " << std::left << std::setw(12) << s.tokens_by_stage[t]
        << std::right << s.rejected_by_stage[t] << "\n";
  out << "  backend errors      " << s.backend_errors << "\n";
  out << "  expected length     " << detail::fixed(s.final_expected_length, 1) << " tokens\n";
  out << "  throughput          " << detail::fixed(s.pairs_per_hour(), 0) << " accepted pairs/hr, "
      << detail::fixed(s.tokens_per_second(), 0) << " tokens/s (wall " << detail::fixed(s.wall_seconds, 2)
      << " s)\n";
  if (!s.error.empty()) out << "  error               " << s.error << "\n";
}

/// generate: runs the pipeline over a prompts file and writes
/// trajectories.jsonl, dataset.jsonl, config.json, summary.json and the
/// dedup index snapshot into the output directory.
inline int cmd_generate(RunConfig cfg, std::ostream& out, std::ostream& err) {
  auto problems = finalize_config(cfg);
  if (!cfg.prompts) problems.push_back("no prompts file given");
  if (!problems.empty()) {
    detail::print_problems(err, problems);
    return kExitUsage;
  }
  std::vector<PromptItem> prompts;
  std::vector<std::string> exemplars;
  try {
    prompts = load_prompts(*cfg.prompts);
    if (cfg.exemplars) exemplars = load_lines(*cfg.exemplars);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (prompts.empty()) {
    err << "error: prompts file '" << *cfg.prompts << "' contains no prompts\n";
    return kExitUsage;
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << cfg.out_dir << "': " << ec.message() << "\n";
    return kExitFailure;
  }
  const fs::path dir(cfg.out_dir);

  auto backend = make_backend(cfg);
  MinHashIndex index(cfg.dedup);
  RunSummary summary;
  try {
    JsonlSink sink((dir / "trajectories.jsonl").string(), (dir / "dataset.jsonl").string(), cfg.run.gating,
                   cfg.seed);
    summary = run_batch(cfg.run, prompts, *backend, sink, cfg.eval_context(), index, exemplars);
    sink.close();
    std::ofstream(dir / "config.json") << config_to_json(cfg).dump(2) << "\n";
    std::ofstream(dir / "summary.json") << summary_to_json(summary).dump(2) << "\n";
    index.save((dir / "minhash.idx").string());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  print_summary(out, summary, cfg.run.gating);
  if (summary.backend_unreachable) {
    err << "error: backend unreachable, run aborted\n";
    return kExitUnreachable;
  }
  if (summary.aborted) return kExitFailure;
  return kExitOk;
}

inline void print_fpfn_table(std::ostream& out, const std::vector<FpFnRow>& rows) {
  out << std::left << std::setw(14) << "benchmark" << std::right << std::setw(8) << "#Good" << std::setw(8)
      << "#Bad" << std::setw(9) << "FPR%" << std::setw(9) << "FNR%" << "\n";
  for (const auto& r : rows)
    out << std::left << std::setw(14) << r.name << std::right << std::setw(8) << r.good << std::setw(8) << r.bad
        << std::setw(9) << detail::fixed(100 * r.fpr(), 1) << std::setw(9) << detail::fixed(100 * r.fnr(), 1)
        << "\n";
}

/// replay: re-validates a full-generation log under the configured policy
/// and reports the savings decomposition, FP/FN rates, score monotonicity
/// and the objective.
inline int cmd_replay(RunConfig cfg, const std::string& log_path, std::ostream& out, std::ostream& err,
                      bool as_json = false, const std::string& name = "run") {
  if (auto problems = finalize_config(cfg); !problems.empty()) {
    detail::print_problems(err, problems);
    return kExitUsage;
  }
  std::vector<Trajectory> log;
  bool header_gating = true;
  try {
    log = read_trajectory_log(log_path, &header_gating);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (header_gating) {
    err << "error: '" << log_path << "' comes from a gated run; replay needs full generations (--no-gating)\n";
    return kExitUsage;
  }
  if (log.empty()) {
    err << "error: '" << log_path << "' holds no trajectories\n";
    return kExitUsage;
  }

  LogSavings savings;
  FpFnRow fpfn;
  MonotonicityReport mono;
  double objective_gated = 0, objective_full = 0;
  try {
    const auto& policy = cfg.run.policy;
    savings = replay_savings(log, policy, cfg.rules);
    fpfn = fpfn_oracle_replay(log, policy, cfg.rules, name);
    mono = surrogate_monotonicity(log);
    auto replayed = log;
    for (auto& t : replayed) t.would_reject_at = replay_gates(t, policy, cfg.rules).would_reject_at;
    objective_gated = objective_value(replayed, policy.lambda_cost);
    for (auto& t : replayed) t.would_reject_at.reset();
    objective_full = objective_value(replayed, policy.lambda_cost);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const double n = static_cast<double>(savings.n);
  if (as_json) {
    json per_stage = json::array();
    for (int t = 0; t < kStageCount; ++t) per_stage.push_back(static_cast<double>(savings.per_stage_terms[t]) / n);
    json violations = json::array();
    for (const auto& v : mono.violations)
      violations.push_back({{"stage", static_cast<int>(v.stage)}, {"lower_score", v.lower_score},
                            {"higher_score", v.higher_score}, {"phi_lower", v.phi_lower},
                            {"phi_higher", v.phi_higher}, {"margin", v.margin}});
    out << json{{"kind", "replay"},
                {"trajectories", savings.n},
                {"e_cost", savings.mean_gated()},
                {"c_full", savings.mean_full()},
                {"per_stage_terms", per_stage},
                {"lower_bound", static_cast<double>(savings.lower_bound()) / n},
                {"savings_fraction", savings.savings_fraction()},
                {"objective", objective_gated},
                {"objective_no_gating", objective_full},
                {"good", fpfn.good},
                {"bad", fpfn.bad},
                {"fpr", fpfn.fpr()},
                {"fnr", fpfn.fnr()},
                {"monotonicity_violations", violations}}
               .dump()
        << "\n";
    return kExitOk;
  }

  out << "replay of " << savings.n << " full generations (cutoff " << cfg.run.policy.midsol_cutoff << ")\n";
  out << "  mean full cost      " << detail::fixed(savings.mean_full(), 2) << " tokens\n";
  out << "  mean gated cost     " << detail::fixed(savings.mean_gated(), 2) << " tokens\n";
  out << "  savings             " << detail::percent(savings.savings_fraction()) << "\n";
  out << "  per-stage terms     ";
  for (int t = 0; t < kStageCount; ++t)
    out << stage_name(stage_at(t + 1)) << "=" << detail::fixed(static_cast<double>(savings.per_stage_terms[t]) / n, 2)
        << (t + 1 < kStageCount ? "  " : "\n");
  out << "  lower bound         " << detail::fixed(static_cast<double>(savings.lower_bound()) / n, 2) << "\n";
  out << "  objective           " << detail::fixed(objective_gated, 6) << " gated, " << detail::fixed(objective_full, 6)
      << " without gating (lambda " << cfg.run.policy.lambda_cost << ")\n\n";
  print_fpfn_table(out, {fpfn});
  out << "\nscore monotonicity: " << mono.violations.size() << " confident violation(s)\n";
  for (const auto& v : mono.violations)
    out << "  " << stage_name(v.stage) << ": phi(" << v.higher_score << ")=" << detail::fixed(v.phi_higher, 3)
        << " < phi(" << v.lower_score << ")=" << detail::fixed(v.phi_lower, 3) << " beyond margin "
        << detail::fixed(v.margin, 3) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify-theory
// ---------------------------------------------------------------------------

namespace detail {

inline Rational rational_from_json(const json& j) {
  std::string s;
  if (j.is_string()) {
    s = j.get<std::string>();
  } else if (j.is_number()) {
    const double d = j.get<double>();
    char buf[512];
    const auto res = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::fixed);
    s.assign(buf, res.ptr);
  } else {
    throw std::invalid_argument("expected a number or a string");
  }
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const auto num = Decimal::parse(s.substr(0, slash));
    const auto den = Decimal::parse(s.substr(slash + 1));
    if (!num || !den || den->value() == 0) throw std::invalid_argument("bad fraction '" + s + "'");
    return num->value() / den->value();
  }
  const auto d = Decimal::parse(s);
  if (!d) throw std::invalid_argument("bad number '" + s + "'");
  return d->value();
}

}  // namespace detail

/// Model file: {"delta_costs": [4 ints], "continue_probs": [3], "quality": [8]}.
/// Probabilities may be numbers, decimal strings or "p/q" fractions.
inline ExactModel model_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("model must be an object");
  for (const auto& [k, v] : j.items())
    if (k != "delta_costs" && k != "continue_probs" && k != "quality")
      throw std::invalid_argument("unknown key '" + k + "'");
  ExactModel m;
  const auto& c = j.at("delta_costs");
  const auto& p = j.at("continue_probs");
  const auto& q = j.at("quality");
  if (!c.is_array() || c.size() != kStageCount) throw std::invalid_argument("delta_costs needs 4 entries");
  if (!p.is_array() || p.size() != kGateCount) throw std::invalid_argument("continue_probs needs 3 entries");
  if (!q.is_array() || q.size() != kPatterns) throw std::invalid_argument("quality needs 8 entries");
  for (int t = 0; t < kStageCount; ++t) m.delta_costs[t] = c[t].get<std::int64_t>();
  for (int t = 0; t < kGateCount; ++t) m.continue_probs[t] = detail::rational_from_json(p[t]);
  for (int w = 0; w < kPatterns; ++w) m.quality[w] = detail::rational_from_json(q[w]);
  if (auto v = validate_model(m); !v.empty()) throw std::invalid_argument(v.front());
  return m;
}

inline std::vector<ExactModel> load_models(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  const json doc = json::parse(in);
  std::vector<ExactModel> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      try {
        out.push_back(model_from_json(doc[i]));
      } catch (const std::exception& e) {
        throw std::runtime_error("model " + std::to_string(i) + ": " + e.what());
      }
    }
  } else {
    try {
      out.push_back(model_from_json(doc));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("model: ") + e.what());
    }
  }
  return out;
}

struct TheoryOptions {
  std::int64_t trials = 100'000;
  int martingale_models = 5;  // models checked against every stopping rule
  int mc_models = 3;          // models given Monte-Carlo checks
  std::uint64_t seed = 42;
};

struct TheoryVerdict {
  std::int64_t models = 0;
  std::int64_t rules_checked = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Exact and Monte-Carlo checks of the savings decomposition, strict
/// savings, the lower bound, the stopping CDF and optional stopping.
inline TheoryVerdict verify_theory(const std::vector<ExactModel>& models, const TheoryOptions& opt) {
  TheoryVerdict v;
  const auto rules = enumerate_stopping_rules();
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    const std::string tag = "model " + std::to_string(i) + ": ";
    ++v.models;
    SavingsReport<Rational> r;
    try {
      r = exact_expected_cost(m);
    } catch (const std::exception& e) {
      v.failures.push_back(tag + e.what());
      continue;
    }
    const Rational gap = r.savings() - decomposition_sum(r);
    if (gap != 0) v.failures.push_back(tag + "decomposition gap " + rational_to_string(gap));
    const Rational p_early = r.stop_cdf[kStageCount - 1];
    if (p_early > 0 && !(r.e_cost < Rational(r.c_full)))
      v.failures.push_back(tag + "no strict savings although P(tau<T) > 0");
    if (p_early == 0 && r.e_cost != Rational(r.c_full))
      v.failures.push_back(tag + "savings without early stopping");
    if (r.savings() < r.lower_bound) v.failures.push_back(tag + "savings below the lower bound");
    for (int t = 1; t < kStageCount; ++t)
      if (r.stop_cdf[t] < r.stop_cdf[t - 1]) v.failures.push_back(tag + "stopping CDF decreases");

    // Same model in floating point: both routes within 1e-12 relative.
    const FloatModel fm = to_float(m);
    try {
      const auto rf = exact_expected_cost(fm, 0.0, 1e-12);
      const double rel = std::abs((static_cast<double>(rf.c_full) - rf.e_cost) - decomposition_sum(rf)) /
                         std::max(1.0, static_cast<double>(rf.c_full));
      if (rel > 1e-12) v.failures.push_back(tag + "floating decomposition error " + std::to_string(rel));
    } catch (const std::exception& e) {
      v.failures.push_back(tag + "floating routes: " + e.what());
    }

    if (static_cast<int>(i) < opt.martingale_models) {
      for (const auto& rule : rules) {
        const auto mr = martingale_check(m, rule);
        ++v.rules_checked;
        if (mr.stopped_value != mr.expected_quality) {
          v.failures.push_back(tag + "optional stopping fails for a measurable rule");
          break;
        }
      }
    }
    if (static_cast<int>(i) < opt.mc_models && opt.trials > 0) {
      const auto seed = derive_seed(opt.seed, {static_cast<std::uint64_t>(i)});
      const auto mc = simulate_expected_cost(fm, opt.trials, seed);
      const double exact_cost = static_cast<double>(r.e_cost);
      if (std::abs(mc.e_cost - exact_cost) > 4 * mc.se_e_cost + 1e-9)
        v.failures.push_back(tag + "Monte-Carlo cost " + std::to_string(mc.e_cost) + " vs exact " +
                             std::to_string(exact_cost) + " beyond 4 SE");
      const auto mm = martingale_check_mc(fm, gated_rule(), opt.trials, derive_seed(seed, {1}));
      if (std::abs(mm.stopped_value - mm.expected_quality) > 4 * mm.se + 1e-9)
        v.failures.push_back(tag + "Monte-Carlo optional stopping beyond 4 SE");
    }
  }
  return v;
}

inline int cmd_verify_theory(const std::vector<ExactModel>& models, const TheoryOptions& opt, std::ostream& out) {
  const auto v = verify_theory(models, opt);
  out << "verify-theory: " << v.models << " model(s), " << v.rules_checked << " stopping-rule checks, "
      << opt.trials << " Monte-Carlo trials on up to " << opt.mc_models << " model(s)\n";
  for (const auto& f : v.failures) out << "  FAIL " << f << "\n";
  out << (v.ok() ? "PASS" : "FAIL") << "\n";
  return v.ok() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// dedup
// ---------------------------------------------------------------------------

inline int cmd_dedup(const std::string& dataset_path, const MinHashParams& params, std::ostream& out,
                     std::ostream& err) {
  if (auto v = validate_minhash_params(params); !v.empty()) {
    detail::print_problems(err, v);
    return kExitUsage;
  }
  std::vector<SampleRecord> samples;
  try {
    samples = read_dataset(dataset_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<std::string> texts;
  texts.reserve(samples.size());
  for (const auto& s : samples) texts.push_back(s.problem + "\n" + s.solution);
  const auto found = find_duplicate_clusters(texts, params);
  out << "dedup: " << samples.size() << " samples, " << found.clusters.size() << " duplicate cluster(s), "
      << found.degenerate.size() << " too short to shingle\n";
  for (std::size_t c = 0; c < found.clusters.size(); ++c) {
    out << "  cluster " << c + 1 << ":";
    for (auto i : found.clusters[c]) out << " " << samples[i].id;
    out << "\n";
  }
  for (auto i : found.degenerate) out << "  degenerate: " << samples[i].id << "\n";
  return kExitOk;
}

}  // namespace inflight
