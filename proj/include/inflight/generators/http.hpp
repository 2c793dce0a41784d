#pragma once

#include "inflight/core/log.hpp"
#include "inflight/core/serialize.hpp"
#include "inflight/generators/backend.hpp"
#include "inflight/generators/chat_template.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <string>
#include <thread>

namespace inflight {

enum class ApiMode { Chat, Completions };

struct HttpConfig {
  std::string endpoint = "http://127.0.0.1:8000";
  std::string model = "default";
  ApiMode mode = ApiMode::Chat;
  ModelFamily family = ModelFamily::ChatML;  // used by completions mode
  std::string api_key_env = "INFLIGHT_API_KEY";
  double timeout_seconds = 60.0;
  int retries = 3;
  int backoff_ms = 250;
  int max_in_flight = 64;

  friend bool operator==(const HttpConfig&, const HttpConfig&) = default;
};

inline std::vector<std::string> validate_http_config(const HttpConfig& c) {
  std::vector<std::string> v;
  if (c.endpoint.rfind("http://", 0) != 0)
    v.push_back("http.endpoint must start with http:// (TLS is not built in)");
  if (c.model.empty()) v.push_back("http.model must not be empty");
  if (!(c.timeout_seconds > 0)) v.push_back("http.timeout_seconds must be > 0");
  if (c.retries < 0) v.push_back("http.retries must be >= 0");
  if (c.backoff_ms < 0) v.push_back("http.backoff_ms must be >= 0");
  if (c.max_in_flight < 1 || c.max_in_flight > 1024) v.push_back("http.max_in_flight must lie in [1, 1024]");
  return v;
}

/// Client for servers speaking the common chat-completions wire format.
/// Continuation resends the partial answer as a trailing assistant turn.
class HttpBackend final : public GeneratorBackend {
 public:
  explicit HttpBackend(HttpConfig cfg) : cfg_(std::move(cfg)), slots_(cfg_.max_in_flight) {
    const auto scheme_end = cfg_.endpoint.find("://");
    const auto path_start = cfg_.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    host_ = cfg_.endpoint.substr(0, path_start);
    base_path_ = path_start == std::string::npos ? "" : cfg_.endpoint.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    if (const char* key = std::getenv(cfg_.api_key_env.c_str())) api_key_ = key;
  }

  const HttpConfig& config() const { return cfg_; }

  Capabilities capabilities() const override { return {true, true}; }

  json request_body(const GenerationRequest& req) const {
    json body{{"model", cfg_.model},
              {"temperature", req.params.temperature},
              {"max_tokens", req.params.max_tokens},
              {"seed", static_cast<std::int64_t>(req.seed & 0x7FFFFFFFFFFFFFFFULL)}};
    if (!req.params.stop.empty()) body["stop"] = req.params.stop;
    if (cfg_.mode == ApiMode::Chat) {
      json messages = json::array();
      if (req.system) messages.push_back({{"role", "system"}, {"content", *req.system}});
      messages.push_back({{"role", "user"}, {"content", req.user}});
      if (!req.assistant_prefix.empty()) {
        messages.push_back({{"role", "assistant"}, {"content", req.assistant_prefix}});
        body["continue_final_message"] = true;
        body["add_generation_prompt"] = false;
      }
      body["messages"] = std::move(messages);
    } else {
      body["prompt"] = apply_chat_template(cfg_.family, req.system, req.user) + req.assistant_prefix;
    }
    return body;
  }

  Generation generate(const GenerationRequest& req) override {
    const std::string path =
        base_path_ + (cfg_.mode == ApiMode::Chat ? "/v1/chat/completions" : "/v1/completions");
    const std::string payload = request_body(req).dump();

    slots_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots_};

    std::string last_error;
    bool unreachable = false;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms * (1LL << (attempt - 1))));
      httplib::Client client(host_);
      const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
      const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
      client.set_connection_timeout(secs, usecs);
      client.set_read_timeout(secs, usecs);
      client.set_write_timeout(secs, usecs);
      if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

      auto res = client.Post(path, payload, "application/json");
      if (!res) {
        unreachable = true;
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      unreachable = false;
      if (res->status == 429 || res->status >= 500) {
        last_error = "server returned HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw BackendError("server returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
      try {
        return parse_response(res->body);
      } catch (const std::exception& e) {
        last_error = std::string("malformed response: ") + e.what();
      }
    }
    throw BackendError(last_error + " (after " + std::to_string(cfg_.retries + 1) + " attempts)", unreachable);
  }

  Generation parse_response(const std::string& body) const {
    const json j = json::parse(body);
    const auto& choice = j.at("choices").at(0);
    Generation g;
    g.text = cfg_.mode == ApiMode::Chat ? choice.at("message").at("content").get<std::string>()
                                        : choice.at("text").get<std::string>();
    const auto& usage = j.at("usage");
    g.tokens = usage.at("completion_tokens").get<std::int64_t>();
    g.prompt_tokens = usage.value("prompt_tokens", std::int64_t{0});
    g.finished = choice.value("finish_reason", std::string("stop")) != "length";
    if (g.tokens < 1) throw std::runtime_error("completion_tokens must be >= 1");
    return g;
  }

 private:
  HttpConfig cfg_;
  std::string host_;
  std::string base_path_;
  std::string api_key_;
  std::counting_semaphore<1024> slots_;
};

}  // namespace inflight
