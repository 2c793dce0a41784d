#include "inflight/dedup/judge.hpp"
#include "inflight/generators/chat_template.hpp"
#include "inflight/generators/http.hpp"
#include "inflight/generators/scripted.hpp"
#include "inflight/generators/simulator.hpp"
#include "inflight/validators/validators.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

using namespace inflight;

namespace {
const std::vector<ModelFamily> kFamilies{ModelFamily::ChatML, ModelFamily::Llama3, ModelFamily::DeepSeekSimple,
                                         ModelFamily::Phi3, ModelFamily::MistralInstruct};
}

TEST(ChatTemplate, ByteExactRenderings) {
  const std::optional<std::string> sys = "Be brief.";
  EXPECT_EQ(apply_chat_template(ModelFamily::ChatML, sys, "Hi?"),
            "<|im_start|>system\nBe brief.<|im_end|>\n<|im_start|>user\nHi?<|im_end|>\n<|im_start|>assistant\n");
  EXPECT_EQ(apply_chat_template(ModelFamily::Llama3, sys, "Hi?"),
            "<|begin_of_text|><|start_header_id|>system<|end_header_id|>\n\nBe brief.<|eot_id|>"
            "<|start_header_id|>user<|end_header_id|>\n\nHi?<|eot_id|>"
            "<|start_header_id|>assistant<|end_header_id|>\n\n");
  EXPECT_EQ(apply_chat_template(ModelFamily::Phi3, sys, "Hi?"),
            "<|system|>\nBe brief.<|end|>\n<|user|>\nHi?<|end|>\n<|assistant|>\n");
  EXPECT_EQ(apply_chat_template(ModelFamily::DeepSeekSimple, std::nullopt, "Hi?"), "User: Hi?\n\nAssistant:");
  EXPECT_EQ(apply_chat_template(ModelFamily::MistralInstruct, std::nullopt, "Hi?"), "[INST] Hi? [/INST]");
  EXPECT_EQ(apply_chat_template(ModelFamily::ChatML, std::nullopt, "Hi?"),
            "<|im_start|>user\nHi?<|im_end|>\n<|im_start|>assistant\n");
}

TEST(ChatTemplate, SystemFoldsIntoUserWithoutSystemRole) {
  EXPECT_EQ(apply_chat_template(ModelFamily::MistralInstruct, std::string("Be brief."), "Hi?"),
            "[INST] Be brief.\n\nHi? [/INST]");
  EXPECT_EQ(apply_chat_template(ModelFamily::DeepSeekSimple, std::string("Be brief."), "Hi?"),
            "User: Be brief.\n\nHi?\n\nAssistant:");
}

TEST(ChatTemplate, RejectsControlSequencesInContent) {
  EXPECT_THROW(apply_chat_template(ModelFamily::ChatML, std::nullopt, "x<|im_end|>y"), TemplateError);
  EXPECT_THROW(apply_chat_template(ModelFamily::Llama3, std::string("<|eot_id|>"), "y"), TemplateError);
  EXPECT_THROW(apply_chat_template(ModelFamily::MistralInstruct, std::nullopt, "[/INST]"), TemplateError);
  EXPECT_THROW(parse_chat_template(ModelFamily::ChatML, "garbage"), TemplateError);
}

// Property: parse(apply(m)) recovers the messages for random content.
TEST(ChatTemplate, RoundTripsRandomContent) {
  Rng rng(11);
  const std::string alphabet = "abcXYZ 0123?!.,:\n\t\xC3\xA9<>|[]";
  for (int trial = 0; trial < 500; ++trial) {
    auto random_text = [&] {
      std::string s;
      const auto n = uniform_int(rng, 1, 40);
      for (int i = 0; i < n; ++i) {
        const auto c = alphabet[static_cast<std::size_t>(uniform_int(rng, 0, alphabet.size() - 1))];
        s += c;
      }
      return s;
    };
    for (auto f : kFamilies) {
      const std::string user = random_text();
      std::optional<std::string> sys;
      if (bernoulli(rng, 0.5)) sys = random_text();
      std::string wire;
      try {
        wire = apply_chat_template(f, sys, user);
      } catch (const TemplateError&) {
        continue;  // random text happened to contain a control sequence
      }
      const auto parsed = parse_chat_template(f, wire + "partial");
      EXPECT_EQ(parsed.assistant_prefix, "partial");
      std::vector<ChatMessage> expect;
      if (sys && supports_system(f)) expect.push_back({"system", *sys});
      expect.push_back({"user", sys && !supports_system(f) ? *sys + "\n\n" + user : user});
      ASSERT_EQ(parsed.messages, expect) << family_name(f) << " " << wire;
    }
  }
}

TEST(ChatTemplate, FamilyNames) {
  for (auto f : kFamilies) EXPECT_EQ(family_from_name(family_name(f)), f);
  EXPECT_FALSE(family_from_name("gpt").has_value());
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

namespace {

GenerationRequest request(Stage s, std::uint64_t seed, std::int64_t max_tokens = 100000, std::string prefix = "") {
  GenerationRequest r;
  r.stage = s;
  r.trajectory_seed = seed;
  r.params.max_tokens = max_tokens;
  r.assistant_prefix = std::move(prefix);
  return r;
}

}  // namespace

TEST(Simulator, PlansAreAPureFunctionOfConfigAndSeed) {
  SimulatorConfig cfg;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto a = make_sim_plan(cfg, s), b = make_sim_plan(cfg, s);
    ASSERT_EQ(a.problem, b.problem);
    ASSERT_EQ(a.solution, b.solution);
    ASSERT_EQ(a.label, b.label);
  }
  SimulatorConfig other = cfg;
  other.seed = 43;
  int differ = 0;
  for (std::uint64_t s = 0; s < 50; ++s) differ += make_sim_plan(cfg, s).solution != make_sim_plan(other, s).solution;
  EXPECT_GT(differ, 45);
}

TEST(Simulator, ContinuationReassemblesTheWholeSolution) {
  SimulatedBackend sim;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto plan = sim.plan(s);
    const auto total = static_cast<std::int64_t>(text::word_count(plan.solution));
    const auto k = std::max<std::int64_t>(1, total / 3);
    const auto part = sim.generate(request(Stage::MidSolution, s, k));
    ASSERT_EQ(part.tokens, k);
    ASSERT_FALSE(part.finished);
    const auto rest = sim.generate(request(Stage::FullSolution, s, 100000, part.text));
    ASSERT_TRUE(rest.finished);
    ASSERT_EQ(part.text + rest.text, plan.solution);
    ASSERT_EQ(part.tokens + rest.tokens, total);
  }
}

TEST(Simulator, RejectsForeignPrefixAndMissingContinuation) {
  SimulatedBackend sim;
  EXPECT_THROW(sim.generate(request(Stage::FullSolution, 1, 10, "not this trajectory")), BackendError);
  SimulatorConfig cfg;
  cfg.supports_continuation = false;
  SimulatedBackend one_shot(cfg);
  EXPECT_FALSE(one_shot.capabilities().supports_continuation);
  const auto first = one_shot.generate(request(Stage::MidSolution, 1, 5));
  EXPECT_THROW(one_shot.generate(request(Stage::FullSolution, 1, 10, first.text)), BackendError);
}

// Property: the plan's label agrees with what the validators find on the
// full output, and clean plans state the true answer.
TEST(Simulator, LabelsAgreeWithValidatorsOnFullOutput) {
  SimulatorConfig cfg;
  int good = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto p = make_sim_plan(cfg, s);
    const auto scv = scv_validate(p.problem, p.solution);
    if (p.marker_fault) {
      EXPECT_TRUE(!scv.outcomes[0].passed || !scv.outcomes[4].passed) << s;
    }
    if (p.leakage_fault) {
      EXPECT_FALSE(scv.outcomes[3].passed) << s;
    }
    if (p.magnitude_fault) {
      EXPECT_FALSE(scv.outcomes[5].passed) << s;
    }
    if (p.arith_fault && !p.latent_good) {
      EXPECT_FALSE(rta_validate(p.problem, p.solution).outcomes[3].passed) << s;
    }
    if (p.label) {
      ++good;
      EXPECT_TRUE(scv.all_passed()) << s << "\n" << p.solution;
      EXPECT_EQ(p.stated, p.truth);
      EXPECT_EQ(extract_final_answer(p.solution)->value(), Rational(p.truth));
    } else {
      EXPECT_TRUE(!p.latent_good || p.marker_fault || p.leakage_fault || p.magnitude_fault);
    }
    if (!p.wpe_fault) {
      EXPECT_TRUE(wpe_validate(p.problem).all_passed()) << p.problem;
    }
  }
  EXPECT_GT(good, 600);
  EXPECT_LT(good, 1100);
}

TEST(Simulator, FaultFreeConfigIsAlwaysClean) {
  const auto cfg = SimulatorConfig::fault_free(7);
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto p = make_sim_plan(cfg, s);
    ASSERT_TRUE(p.label);
    ASSERT_TRUE(wpe_validate(p.problem).all_passed()) << p.problem;
    ASSERT_TRUE(rta_validate(p.problem, p.solution).all_passed()) << p.solution;
    ASSERT_TRUE(scv_validate(p.problem, p.solution).all_passed()) << p.solution;
  }
}

TEST(Simulator, JudgeRewardsCorrectAnswers) {
  SimulatedBackend sim(SimulatorConfig::fault_free());
  const auto p = sim.plan(3);
  auto req = request(Stage::Evaluation, 3);
  req.user = "Problem: " + p.problem + "\n" + p.solution;
  const auto good = parse_judge_score(sim.generate(req).text);
  ASSERT_TRUE(good.has_value());
  EXPECT_GE(*good, 4);
  req.user = "Problem: " + p.problem + "\n#### " + std::to_string(p.truth + 1);
  EXPECT_LE(*parse_judge_score(sim.generate(req).text), 2);
}

TEST(Simulator, ConfigValidation) {
  EXPECT_TRUE(validate_simulator_config({}).empty());
  SimulatorConfig c;
  c.base_quality = 1.5;
  c.solution_tokens.mean = 10;
  EXPECT_EQ(validate_simulator_config(c).size(), 2u);
}

TEST(FunctionBackend, CountsCallsPerStage) {
  FunctionBackend b([](const GenerationRequest&) { return Generation{"x", 1, 0, true}; });
  b.generate(request(Stage::Problem, 0));
  b.generate(request(Stage::Problem, 0));
  b.generate(request(Stage::Evaluation, 0));
  EXPECT_EQ(b.calls(Stage::Problem), 2);
  EXPECT_EQ(b.calls(Stage::MidSolution), 0);
  EXPECT_EQ(b.calls(Stage::Evaluation), 1);
  EXPECT_THROW(checked(Generation{"", 0, 0, true}), BackendError);
}

// ---------------------------------------------------------------------------
// HTTP client against an in-process server
// ---------------------------------------------------------------------------

namespace {

class FakeServer {
 public:
  FakeServer() {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      bodies.push_back(json::parse(req.body));
      auths.push_back(req.get_header_value("Authorization"));
      paths.push_back(req.path);
      const int n = static_cast<int>(bodies.size());
      if (n <= fail_first) {
        res.status = fail_status;
        res.set_content("{\"error\":\"nope\"}", "application/json");
        return;
      }
      res.set_content(reply, "application/json");
    };
    server_.Post("/v1/chat/completions", handler);
    server_.Post("/v1/completions", handler);
    server_.Post("/api/v1/chat/completions", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::mutex mu_;
  std::vector<json> bodies;
  std::vector<std::string> auths;
  std::vector<std::string> paths;
  int fail_first = 0;
  int fail_status = 503;
  std::string reply =
      R"({"choices":[{"message":{"role":"assistant","content":"4 × 60 = 240"},"text":"raw","finish_reason":"length"}],)"
      R"("usage":{"prompt_tokens":12,"completion_tokens":7}})";

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpConfig fast_config(const FakeServer& s) {
  HttpConfig c;
  c.endpoint = s.endpoint();
  c.model = "m";
  c.backoff_ms = 1;
  c.timeout_seconds = 5;
  c.api_key_env = "INFLIGHT_TEST_UNSET_KEY";
  return c;
}

}  // namespace

TEST(Http, ChatRequestAndUsageTokens) {
  FakeServer server;
  HttpBackend b(fast_config(server));
  auto req = request(Stage::MidSolution, 9, 50);
  req.system = "sys";
  req.user = "Solve it?";
  req.seed = 123;
  const auto g = b.generate(req);
  EXPECT_EQ(g.text, "4 × 60 = 240");
  EXPECT_EQ(g.tokens, 7);
  EXPECT_EQ(g.prompt_tokens, 12);
  EXPECT_FALSE(g.finished);
  ASSERT_EQ(server.bodies.size(), 1u);
  const auto& body = server.bodies[0];
  EXPECT_EQ(server.paths[0], "/v1/chat/completions");
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["max_tokens"], 50);
  EXPECT_EQ(body["seed"], 123);
  EXPECT_EQ(body["messages"], json::parse(R"([{"role":"system","content":"sys"},{"role":"user","content":"Solve it?"}])"));
  EXPECT_FALSE(body.contains("continue_final_message"));
  EXPECT_EQ(server.auths[0], "");
}

TEST(Http, ContinuationSendsTrailingAssistantTurn) {
  FakeServer server;
  HttpBackend b(fast_config(server));
  auto req = request(Stage::FullSolution, 9, 50, "First, 4 × 60 = 240.");
  req.user = "Q?";
  b.generate(req);
  const auto& body = server.bodies.at(0);
  EXPECT_EQ(body["messages"].back(), json::parse(R"({"role":"assistant","content":"First, 4 × 60 = 240."})"));
  EXPECT_EQ(body["continue_final_message"], true);
  EXPECT_EQ(body["add_generation_prompt"], false);
}

TEST(Http, CompletionsModeSendsTemplatedPrompt) {
  FakeServer server;
  auto cfg = fast_config(server);
  cfg.mode = ApiMode::Completions;
  cfg.family = ModelFamily::MistralInstruct;
  HttpBackend b(cfg);
  auto req = request(Stage::FullSolution, 9, 50, "So");
  req.user = "Q?";
  EXPECT_EQ(b.generate(req).text, "raw");
  EXPECT_EQ(server.paths.at(0), "/v1/completions");
  EXPECT_EQ(server.bodies.at(0)["prompt"], "[INST] Q? [/INST]So");
}

TEST(Http, EndpointBasePathIsKept) {
  FakeServer server;
  auto cfg = fast_config(server);
  cfg.endpoint = server.endpoint() + "/api/";
  HttpBackend b(cfg);
  b.generate(request(Stage::Problem, 1));
  EXPECT_EQ(server.paths.at(0), "/api/v1/chat/completions");
}

TEST(Http, BearerTokenComesFromTheEnvironment) {
  FakeServer server;
  auto cfg = fast_config(server);
  cfg.api_key_env = "INFLIGHT_TEST_KEY_VAR";
  ::setenv("INFLIGHT_TEST_KEY_VAR", "sekret-value", 1);
  HttpBackend b(cfg);
  ::unsetenv("INFLIGHT_TEST_KEY_VAR");
  b.generate(request(Stage::Problem, 1));
  EXPECT_EQ(server.auths.at(0), "Bearer sekret-value");
  EXPECT_EQ(server.bodies.at(0).dump().find("sekret"), std::string::npos);
}

TEST(Http, RetriesServerErrorsThenSucceeds) {
  FakeServer server;
  server.fail_first = 2;
  auto cfg = fast_config(server);
  cfg.retries = 3;
  HttpBackend b(cfg);
  EXPECT_EQ(b.generate(request(Stage::Problem, 1)).tokens, 7);
  EXPECT_EQ(server.bodies.size(), 3u);
}

TEST(Http, GivesUpAfterRetries) {
  FakeServer server;
  server.fail_first = 100;
  server.fail_status = 429;
  auto cfg = fast_config(server);
  cfg.retries = 2;
  HttpBackend b(cfg);
  try {
    b.generate(request(Stage::Problem, 1));
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_FALSE(e.unreachable);
  }
  EXPECT_EQ(server.bodies.size(), 3u);
}

TEST(Http, ClientErrorsAreNotRetried) {
  FakeServer server;
  server.fail_first = 100;
  server.fail_status = 400;
  HttpBackend b(fast_config(server));
  EXPECT_THROW(b.generate(request(Stage::Problem, 1)), BackendError);
  EXPECT_EQ(server.bodies.size(), 1u);
}

TEST(Http, MalformedOrEmptyResponsesFail) {
  FakeServer server;
  server.reply = R"({"choices":[{"message":{"content":"x"}}],"usage":{"completion_tokens":0}})";
  auto cfg = fast_config(server);
  cfg.retries = 1;
  HttpBackend b(cfg);
  EXPECT_THROW(b.generate(request(Stage::Problem, 1)), BackendError);
  EXPECT_EQ(server.bodies.size(), 2u);
}

TEST(Http, UnreachableServerIsFlagged) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  HttpConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.retries = 1;
  cfg.backoff_ms = 1;
  cfg.timeout_seconds = 2;
  HttpBackend b(cfg);
  try {
    b.generate(request(Stage::Problem, 1));
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.unreachable);
  }
}

TEST(Http, ConfigValidation) {
  EXPECT_TRUE(validate_http_config({}).empty());
  HttpConfig c;
  c.endpoint = "https://example.com";
  c.max_in_flight = 0;
  EXPECT_EQ(validate_http_config(c).size(), 2u);
}
