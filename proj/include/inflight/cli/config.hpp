#pragma once

#include "inflight/core/serialize.hpp"
#include "inflight/dedup/judge.hpp"
#include "inflight/dedup/minhash.hpp"
#include "inflight/generators/http.hpp"
#include "inflight/generators/simulator.hpp"
#include "inflight/pipeline/pipeline.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace inflight {

enum class BackendKind { Sim, Http };

/// Everything a run needs. `seed` is the single source of randomness: it
/// feeds the pipeline and the simulator.
struct RunConfig {
  std::uint64_t seed = 42;
  BackendKind backend = BackendKind::Sim;
  PipelineRun run;
  RuleConfig rules;
  JudgeConfig judge;
  std::optional<std::string> rubric_file;
  MinHashParams dedup;
  SimulatorConfig simulator;
  HttpConfig http;
  std::optional<std::string> prompts;
  std::optional<std::string> exemplars;
  std::string out_dir = "out";

  EvalContext eval_context() const { return {rules, judge, dedup}; }
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems(std::move(problems)) {}
  std::vector<std::string> problems;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& p : v) s += (s.empty() ? "" : "; ") + p;
    return s;
  }
};

namespace detail {
template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}
}  // namespace detail

/// Canonical form of a config: every key, defaults filled in, fixed order.
inline json config_to_json(const RunConfig& c) {
  const auto& r = c.run;
  const auto& s = c.simulator;
  return json{
      {"seed", c.seed},
      {"backend", c.backend == BackendKind::Sim ? "sim" : "http"},
      {"policy", r.policy},
      {"run",
       {{"batch_size", r.batch_size},
        {"target_accepted", r.target_accepted},
        {"sampling_mix", r.sampling_mix},
        {"few_shot_k", r.few_shot_k},
        {"gating", r.gating},
        {"problem_temperature", r.problem_temperature},
        {"solution_temperature", r.solution_temperature},
        {"length_bootstrap", r.length_bootstrap},
        {"max_problem_tokens", r.max_problem_tokens},
        {"max_solution_tokens", r.max_solution_tokens},
        {"threads", r.threads}}},
      {"rules",
       {{"hallucination_lexicon", c.rules.hallucination_lexicon},
        {"leakage_markers", c.rules.leakage_markers},
        {"final_marker", c.rules.final_marker},
        {"arith_tolerance", rational_to_string(c.rules.arith_tolerance)}}},
      {"judge",
       {{"min_score", c.judge.min_score},
        {"retries", c.judge.retries},
        {"temperature", c.judge.temperature},
        {"max_tokens", c.judge.max_tokens},
        {"rubric_file", detail::opt_json(c.rubric_file)}}},
      {"dedup",
       {{"num_hashes", c.dedup.num_hashes},
        {"shingle_size", c.dedup.shingle_size},
        {"threshold", c.dedup.threshold},
        {"seed", c.dedup.seed}}},
      {"simulator",
       {{"base_quality", s.base_quality},
        {"fault_probs",
         {{"wpe", s.fault_probs.wpe},
          {"arith", s.fault_probs.arith},
          {"marker", s.fault_probs.marker},
          {"leakage", s.fault_probs.leakage},
          {"magnitude", s.fault_probs.magnitude}}},
        {"quality_correlation", s.quality_correlation},
        {"adversarial", s.adversarial},
        {"benign_anomaly", s.benign_anomaly},
        {"arith_position_shape", s.arith_position_shape},
        {"solution_tokens", {{"mean", s.solution_tokens.mean}, {"dispersion", s.solution_tokens.dispersion}}},
        {"supports_continuation", s.supports_continuation}}},
      {"http",
       {{"endpoint", c.http.endpoint},
        {"model", c.http.model},
        {"mode", c.http.mode == ApiMode::Chat ? "chat" : "completions"},
        {"family", family_name(c.http.family)},
        {"api_key_env", c.http.api_key_env},
        {"timeout_seconds", c.http.timeout_seconds},
        {"retries", c.http.retries},
        {"backoff_ms", c.http.backoff_ms},
        {"max_in_flight", c.http.max_in_flight}}},
      {"paths",
       {{"prompts", detail::opt_json(c.prompts)},
        {"exemplars", detail::opt_json(c.exemplars)},
        {"out_dir", c.out_dir}}},
  };
}

namespace detail {

// Keys whose default is null but which accept a value.
inline bool nullable_key(const std::string& path) {
  return path == "policy.cost_template" || path == "judge.rubric_file" || path == "paths.prompts" ||
         path == "paths.exemplars";
}

inline void overlay(json& base, const json& user, const std::string& prefix, std::vector<std::string>& problems) {
  if (!user.is_object()) {
    problems.push_back((prefix.empty() ? "config" : prefix) + " must be an object");
    return;
  }
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) {
      problems.push_back("unknown key '" + path + "'");
      continue;
    }
    auto& slot = base[key];
    if (slot.is_object() && !nullable_key(path)) overlay(slot, value, path, problems);
    else slot = value;
  }
}

}  // namespace detail

/// Parses a config document over the defaults. Unknown keys, wrong types and
/// invariant violations are all collected and thrown together.
inline RunConfig config_from_json(const json& user) {
  RunConfig c;
  json merged = config_to_json(c);
  std::vector<std::string> problems;
  detail::overlay(merged, user, "", problems);
  if (!problems.empty()) throw ConfigError(problems);

  auto field = [&](const char* path, auto&& assign) {
    try {
      assign();
    } catch (const std::exception& e) {
      problems.push_back(std::string(path) + ": " + e.what());
    }
  };
  const json& m = merged;
  field("seed", [&] { c.seed = m.at("seed").get<std::uint64_t>(); });
  field("backend", [&] {
    const auto b = m.at("backend").get<std::string>();
    if (b == "sim") c.backend = BackendKind::Sim;
    else if (b == "http") c.backend = BackendKind::Http;
    else throw std::invalid_argument("must be 'sim' or 'http'");
  });
  field("policy", [&] { c.run.policy = m.at("policy").get<StagePolicy>(); });
  const json& r = m.at("run");
  field("run.batch_size", [&] { c.run.batch_size = r.at("batch_size").get<int>(); });
  field("run.target_accepted", [&] { c.run.target_accepted = r.at("target_accepted").get<std::int64_t>(); });
  field("run.sampling_mix", [&] { c.run.sampling_mix = r.at("sampling_mix").get<double>(); });
  field("run.few_shot_k", [&] { c.run.few_shot_k = r.at("few_shot_k").get<int>(); });
  field("run.gating", [&] { c.run.gating = r.at("gating").get<bool>(); });
  field("run.problem_temperature", [&] { c.run.problem_temperature = r.at("problem_temperature").get<double>(); });
  field("run.solution_temperature", [&] { c.run.solution_temperature = r.at("solution_temperature").get<double>(); });
  field("run.length_bootstrap", [&] { c.run.length_bootstrap = r.at("length_bootstrap").get<double>(); });
  field("run.max_problem_tokens", [&] { c.run.max_problem_tokens = r.at("max_problem_tokens").get<std::int64_t>(); });
  field("run.max_solution_tokens",
        [&] { c.run.max_solution_tokens = r.at("max_solution_tokens").get<std::int64_t>(); });
  field("run.threads", [&] { c.run.threads = r.at("threads").get<int>(); });

  const json& ru = m.at("rules");
  field("rules.hallucination_lexicon",
        [&] { c.rules.hallucination_lexicon = ru.at("hallucination_lexicon").get<std::vector<std::string>>(); });
  field("rules.leakage_markers",
        [&] { c.rules.leakage_markers = ru.at("leakage_markers").get<std::vector<std::string>>(); });
  field("rules.final_marker", [&] { c.rules.final_marker = ru.at("final_marker").get<std::string>(); });
  field("rules.arith_tolerance", [&] {
    const auto d = Decimal::parse(ru.at("arith_tolerance").get<std::string>());
    if (!d || d->negative()) throw std::invalid_argument("must be a non-negative decimal string");
    c.rules.arith_tolerance = d->value();
  });

  const json& jd = m.at("judge");
  field("judge.min_score", [&] { c.judge.min_score = jd.at("min_score").get<int>(); });
  field("judge.retries", [&] { c.judge.retries = jd.at("retries").get<int>(); });
  field("judge.temperature", [&] { c.judge.temperature = jd.at("temperature").get<double>(); });
  field("judge.max_tokens", [&] { c.judge.max_tokens = jd.at("max_tokens").get<std::int64_t>(); });
  field("judge.rubric_file", [&] {
    const auto& f = jd.at("rubric_file");
    if (!f.is_null()) {
      c.rubric_file = f.get<std::string>();
      c.judge.rubric = load_rubric(*c.rubric_file);
    }
  });

  const json& dd = m.at("dedup");
  field("dedup.num_hashes", [&] { c.dedup.num_hashes = dd.at("num_hashes").get<int>(); });
  field("dedup.shingle_size", [&] { c.dedup.shingle_size = dd.at("shingle_size").get<int>(); });
  field("dedup.threshold", [&] { c.dedup.threshold = dd.at("threshold").get<double>(); });
  field("dedup.seed", [&] { c.dedup.seed = dd.at("seed").get<std::uint64_t>(); });

  const json& s = m.at("simulator");
  auto& sc = c.simulator;
  field("simulator.base_quality", [&] { sc.base_quality = s.at("base_quality").get<double>(); });
  field("simulator.fault_probs", [&] {
    const auto& f = s.at("fault_probs");
    if (!f.is_object()) throw std::invalid_argument("must be an object");
    sc.fault_probs.wpe = f.at("wpe").get<double>();
    sc.fault_probs.arith = f.at("arith").get<double>();
    sc.fault_probs.marker = f.at("marker").get<double>();
    sc.fault_probs.leakage = f.at("leakage").get<double>();
    sc.fault_probs.magnitude = f.at("magnitude").get<double>();
  });
  field("simulator.quality_correlation",
        [&] { sc.quality_correlation = s.at("quality_correlation").get<double>(); });
  field("simulator.adversarial", [&] { sc.adversarial = s.at("adversarial").get<bool>(); });
  field("simulator.benign_anomaly", [&] { sc.benign_anomaly = s.at("benign_anomaly").get<double>(); });
  field("simulator.arith_position_shape",
        [&] { sc.arith_position_shape = s.at("arith_position_shape").get<double>(); });
  field("simulator.solution_tokens", [&] {
    sc.solution_tokens.mean = s.at("solution_tokens").at("mean").get<double>();
    sc.solution_tokens.dispersion = s.at("solution_tokens").at("dispersion").get<double>();
  });
  field("simulator.supports_continuation",
        [&] { sc.supports_continuation = s.at("supports_continuation").get<bool>(); });

  const json& h = m.at("http");
  field("http.endpoint", [&] { c.http.endpoint = h.at("endpoint").get<std::string>(); });
  field("http.model", [&] { c.http.model = h.at("model").get<std::string>(); });
  field("http.mode", [&] {
    const auto mode = h.at("mode").get<std::string>();
    if (mode == "chat") c.http.mode = ApiMode::Chat;
    else if (mode == "completions") c.http.mode = ApiMode::Completions;
    else throw std::invalid_argument("must be 'chat' or 'completions'");
  });
  field("http.family", [&] {
    const auto f = family_from_name(h.at("family").get<std::string>());
    if (!f) throw std::invalid_argument("unknown model family");
    c.http.family = *f;
  });
  field("http.api_key_env", [&] { c.http.api_key_env = h.at("api_key_env").get<std::string>(); });
  field("http.timeout_seconds", [&] { c.http.timeout_seconds = h.at("timeout_seconds").get<double>(); });
  field("http.retries", [&] { c.http.retries = h.at("retries").get<int>(); });
  field("http.backoff_ms", [&] { c.http.backoff_ms = h.at("backoff_ms").get<int>(); });
  field("http.max_in_flight", [&] { c.http.max_in_flight = h.at("max_in_flight").get<int>(); });

  const json& p = m.at("paths");
  field("paths.prompts", [&] {
    if (!p.at("prompts").is_null()) c.prompts = p.at("prompts").get<std::string>();
  });
  field("paths.exemplars", [&] {
    if (!p.at("exemplars").is_null()) c.exemplars = p.at("exemplars").get<std::string>();
  });
  field("paths.out_dir", [&] { c.out_dir = p.at("out_dir").get<std::string>(); });

  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

/// Applies cross-field wiring (seed, caps) and returns every violation.
inline std::vector<std::string> finalize_config(RunConfig& c) {
  c.run.seed = c.seed;
  c.simulator.seed = c.seed;
  c.rules.caps = c.run.policy.caps;
  std::vector<std::string> v = validate_run(c.run);
  for (auto& s : validate_rule_config(c.rules)) v.push_back("rules: " + s);
  for (auto& s : validate_judge_config(c.judge)) v.push_back(s);
  for (auto& s : validate_minhash_params(c.dedup)) v.push_back("dedup: " + s);
  for (auto& s : validate_simulator_config(c.simulator)) v.push_back(s);
  if (c.backend == BackendKind::Http)
    for (auto& s : validate_http_config(c.http)) v.push_back(s);
  if (c.out_dir.empty()) v.push_back("paths.out_dir must not be empty");
  return v;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({"config file '" + path + "' is not valid JSON: " + std::string(e.what())});
  }
  return config_from_json(doc);
}

}  // namespace inflight
