#pragma once

#include "inflight/core/types.hpp"

#include <json.hpp>

namespace inflight {

using nlohmann::json;

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline Stage stage_field(const json& j) {
  auto s = stage_from_int(j.get<long long>());
  if (!s) throw SchemaError("invalid stage index " + j.dump());
  return *s;
}
}  // namespace detail

inline void to_json(json& j, const Decimal& d) { j = d.text(); }
inline void from_json(const json& j, Decimal& d) {
  auto parsed = Decimal::parse(j.get<std::string>());
  if (!parsed) throw SchemaError("invalid decimal " + j.dump());
  d = *parsed;
}

inline void to_json(json& j, const RuleOutcome& o) {
  j = json{{"rule", o.rule_id}, {"passed", o.passed}, {"detail", o.detail}};
}
inline void from_json(const json& j, RuleOutcome& o) {
  o.rule_id = j.at("rule").get<std::string>();
  o.passed = j.at("passed").get<bool>();
  o.detail = j.at("detail").get<std::string>();
}

inline void to_json(json& j, const ValidationReport& r) {
  j = json{{"stage", static_cast<int>(r.stage)}, {"score", r.score}, {"outcomes", r.outcomes}};
}
inline void from_json(const json& j, ValidationReport& r) {
  r.stage = detail::stage_field(j.at("stage"));
  r.outcomes = j.at("outcomes").get<std::vector<RuleOutcome>>();
  r.score = j.at("score").get<int>();
  int passed = 0;
  for (const auto& o : r.outcomes) passed += o.passed ? 1 : 0;
  if (passed != r.score) throw SchemaError("report score does not match its outcomes");
}

inline void to_json(json& j, const CostLedger& l) {
  j = json{{"delta_costs", l.delta_costs},
           {"stop_stage", l.stop_stage ? json(static_cast<int>(*l.stop_stage)) : json(nullptr)},
           {"cumulative", l.cumulative}};
}
inline void from_json(const json& j, CostLedger& l) {
  l.delta_costs = j.at("delta_costs").get<std::array<std::int64_t, kStageCount>>();
  const auto& s = j.at("stop_stage");
  l.stop_stage = s.is_null() ? std::nullopt : std::optional<Stage>(detail::stage_field(s));
  l.cumulative = j.at("cumulative").get<std::int64_t>();
  if (!l.consistent()) throw SchemaError("cost ledger is inconsistent");
}

inline void to_json(json& j, const Caps& c) {
  j = json{{"magnitude_relative", c.magnitude_relative},
           {"magnitude_absolute", c.magnitude_absolute},
           {"word_min", c.word_min},
           {"word_max", c.word_max}};
}
inline void from_json(const json& j, Caps& c) {
  c.magnitude_relative = j.at("magnitude_relative").get<double>();
  c.magnitude_absolute = j.at("magnitude_absolute").get<std::int64_t>();
  c.word_min = j.at("word_min").get<int>();
  c.word_max = j.at("word_max").get<int>();
}

inline void to_json(json& j, const StagePolicy& p) {
  j = json{{"thresholds", p.thresholds},
           {"check_counts", p.check_counts},
           {"midsol_cutoff", p.midsol_cutoff},
           {"lambda_cost", p.lambda_cost},
           {"caps", p.caps},
           {"cost_template", p.cost_template ? json(*p.cost_template) : json(nullptr)}};
}
inline void from_json(const json& j, StagePolicy& p) {
  p.thresholds = j.at("thresholds").get<std::array<int, kGateCount>>();
  p.check_counts = j.at("check_counts").get<std::array<int, kGateCount>>();
  p.midsol_cutoff = j.at("midsol_cutoff").get<double>();
  p.lambda_cost = j.at("lambda_cost").get<double>();
  p.caps = j.at("caps").get<Caps>();
  const auto& c = j.at("cost_template");
  if (c.is_null()) p.cost_template.reset();
  else p.cost_template = c.get<std::array<std::int64_t, kStageCount>>();
}

inline void to_json(json& j, const StageOutput& o) {
  j = json{{"stage", static_cast<int>(o.stage)}, {"text", o.text}, {"tokens", o.tokens}};
}
inline void from_json(const json& j, StageOutput& o) {
  o.stage = detail::stage_field(j.at("stage"));
  o.text = j.at("text").get<std::string>();
  o.tokens = j.at("tokens").get<std::int64_t>();
  if (o.tokens < 0) throw SchemaError("negative token count");
}

inline void to_json(json& j, const TrajectoryStatus& s) {
  if (std::holds_alternative<Accepted>(s)) {
    j = json{{"state", "accepted"}};
  } else if (const auto* r = std::get_if<RejectedAt>(&s)) {
    j = json{{"state", "rejected"}, {"stage", static_cast<int>(r->stage)}, {"rules", r->rule_ids}};
  } else {
    j = json{{"state", "in_flight"}};
  }
}
inline void from_json(const json& j, TrajectoryStatus& s) {
  const auto state = j.at("state").get<std::string>();
  if (state == "accepted") s = Accepted{};
  else if (state == "in_flight") s = InFlight{};
  else if (state == "rejected")
    s = RejectedAt{detail::stage_field(j.at("stage")), j.at("rules").get<std::vector<std::string>>()};
  else throw SchemaError("unknown trajectory state '" + state + "'");
}

inline void to_json(json& j, const Trajectory& t) {
  std::vector<std::string> hits;
  for (const auto& r : t.reports)
    for (auto& id : r.failed_rules()) hits.push_back(std::move(id));
  j = json{{"kind", "trajectory"},
           {"id", t.id},
           {"prompt", t.prompt},
           {"seed", t.seed},
           {"gated", t.gated},
           {"stage_outputs", t.stage_outputs},
           {"status", t.status},
           {"reports", t.reports},
           {"rule_hits", hits},
           {"would_reject_at",
            t.would_reject_at ? json(static_cast<int>(*t.would_reject_at)) : json(nullptr)},
           {"oracle_label", t.oracle_label ? json(*t.oracle_label) : json(nullptr)},
           {"ledger", t.ledger}};
}
inline void from_json(const json& j, Trajectory& t) {
  if (j.at("kind").get<std::string>() != "trajectory") throw SchemaError("record is not a trajectory");
  t.id = j.at("id").get<std::uint64_t>();
  t.prompt = j.at("prompt").get<std::string>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.gated = j.at("gated").get<bool>();
  t.stage_outputs = j.at("stage_outputs").get<std::vector<StageOutput>>();
  t.status = j.at("status").get<TrajectoryStatus>();
  t.reports = j.at("reports").get<std::vector<ValidationReport>>();
  const auto& w = j.at("would_reject_at");
  t.would_reject_at = w.is_null() ? std::nullopt : std::optional<Stage>(detail::stage_field(w));
  const auto& l = j.at("oracle_label");
  t.oracle_label = l.is_null() ? std::nullopt : std::optional<bool>(l.get<bool>());
  t.ledger = j.at("ledger").get<CostLedger>();
  if (const auto* r = t.rejection()) {
    for (const auto& o : t.stage_outputs)
      if (o.stage > r->stage) throw SchemaError("stage output recorded past the rejection stage");
  }
}

inline void to_json(json& j, const SampleRecord& s) {
  j = json{{"kind", "sample"},
           {"id", s.id},
           {"problem", s.problem},
           {"solution", s.solution},
           {"final_answer", s.final_answer},
           {"tier", s.tier ? json(tier_name(*s.tier)) : json(nullptr)},
           {"difficulty", s.difficulty_scalar ? json(*s.difficulty_scalar) : json(nullptr)},
           {"judge_score", s.judge_score ? json(*s.judge_score) : json(nullptr)},
           {"minhash", s.minhash_signature},
           {"ledger", s.ledger}};
}
inline void from_json(const json& j, SampleRecord& s) {
  if (j.at("kind").get<std::string>() != "sample") throw SchemaError("record is not a sample");
  s.id = j.at("id").get<std::uint64_t>();
  s.problem = j.at("problem").get<std::string>();
  s.solution = j.at("solution").get<std::string>();
  s.final_answer = j.at("final_answer").get<Decimal>();
  const auto& tier = j.at("tier");
  if (tier.is_null()) {
    s.tier.reset();
  } else {
    const auto name = tier.get<std::string>();
    if (name == "easy") s.tier = Tier::Easy;
    else if (name == "medium") s.tier = Tier::Medium;
    else if (name == "hard") s.tier = Tier::Hard;
    else throw SchemaError("unknown tier '" + name + "'");
  }
  const auto& d = j.at("difficulty");
  s.difficulty_scalar = d.is_null() ? std::nullopt : std::optional<double>(d.get<double>());
  const auto& js = j.at("judge_score");
  s.judge_score = js.is_null() ? std::nullopt : std::optional<int>(js.get<int>());
  s.minhash_signature = j.at("minhash").get<std::vector<std::uint64_t>>();
  s.ledger = j.at("ledger").get<CostLedger>();
}

}  // namespace inflight
