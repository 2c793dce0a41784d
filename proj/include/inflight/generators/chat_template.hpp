#pragma once

#include "inflight/core/log.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace inflight {

enum class ModelFamily { ChatML, Llama3, DeepSeekSimple, Phi3, MistralInstruct };

inline const char* family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::ChatML: return "chatml";
    case ModelFamily::Llama3: return "llama3";
    case ModelFamily::DeepSeekSimple: return "deepseek";
    case ModelFamily::Phi3: return "phi3";
    case ModelFamily::MistralInstruct: return "mistral";
  }
  return "?";
}

inline std::optional<ModelFamily> family_from_name(std::string_view s) {
  for (auto f : {ModelFamily::ChatML, ModelFamily::Llama3, ModelFamily::DeepSeekSimple,
                 ModelFamily::Phi3, ModelFamily::MistralInstruct})
    if (s == family_name(f)) return f;
  return std::nullopt;
}

inline bool supports_system(ModelFamily f) {
  return f == ModelFamily::ChatML || f == ModelFamily::Llama3 || f == ModelFamily::Phi3;
}

struct ChatMessage {
  std::string role;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct TemplateError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::vector<std::string_view> control_sequences(ModelFamily f) {
  switch (f) {
    case ModelFamily::ChatML: return {"<|im_start|>", "<|im_end|>"};
    case ModelFamily::Llama3:
      return {"<|begin_of_text|>", "<|start_header_id|>", "<|end_header_id|>", "<|eot_id|>"};
    case ModelFamily::DeepSeekSimple: return {"\n\nAssistant:"};
    case ModelFamily::Phi3: return {"<|system|>", "<|user|>", "<|assistant|>", "<|end|>"};
    case ModelFamily::MistralInstruct: return {"[INST]", "[/INST]"};
  }
  return {};
}

inline void check_content(ModelFamily f, std::string_view content) {
  for (auto seq : control_sequences(f))
    if (content.find(seq) != std::string_view::npos)
      throw TemplateError(std::string("content contains control sequence '") + std::string(seq) +
                          "' of the " + family_name(f) + " template");
}

inline bool consume(std::string_view& s, std::string_view p) {
  if (s.substr(0, p.size()) != p) return false;
  s.remove_prefix(p.size());
  return true;
}

}  // namespace detail

/// Wire-ready prompt for a single-turn exchange, ending where the assistant
/// reply begins. Families without a system role get the system text
/// prepended to the user turn.
inline std::string apply_chat_template(ModelFamily f, const std::optional<std::string>& system,
                                       const std::string& user) {
  std::optional<std::string> sys = system;
  std::string usr = user;
  if (sys && !supports_system(f)) {
    log::notice(std::string(family_name(f)) +
                " has no system role; system text prepended to the user turn");
    usr = *sys + "\n\n" + usr;
    sys.reset();
  }
  if (sys) detail::check_content(f, *sys);
  detail::check_content(f, usr);

  std::string out;
  switch (f) {
    case ModelFamily::ChatML:
      if (sys) out += "<|im_start|>system\n" + *sys + "<|im_end|>\n";
      out += "<|im_start|>user\n" + usr + "<|im_end|>\n";
      out += "<|im_start|>assistant\n";
      break;
    case ModelFamily::Llama3:
      out += "<|begin_of_text|>";
      if (sys) out += "<|start_header_id|>system<|end_header_id|>\n\n" + *sys + "<|eot_id|>";
      out += "<|start_header_id|>user<|end_header_id|>\n\n" + usr + "<|eot_id|>";
      out += "<|start_header_id|>assistant<|end_header_id|>\n\n";
      break;
    case ModelFamily::DeepSeekSimple:
      out += "User: " + usr + "\n\nAssistant:";
      break;
    case ModelFamily::Phi3:
      if (sys) out += "<|system|>\n" + *sys + "<|end|>\n";
      out += "<|user|>\n" + usr + "<|end|>\n";
      out += "<|assistant|>\n";
      break;
    case ModelFamily::MistralInstruct:
      out += "[INST] " + usr + " [/INST]";
      break;
  }
  return out;
}

/// Inverse of apply_chat_template: recovers the (role, content) turns and
/// any text already placed after the assistant header.
struct ParsedPrompt {
  std::vector<ChatMessage> messages;
  std::string assistant_prefix;
};

inline ParsedPrompt parse_chat_template(ModelFamily f, std::string_view wire) {
  ParsedPrompt p;
  auto fail = [&](const char* why) {
    throw TemplateError(std::string("malformed ") + family_name(f) + " prompt: " + why);
  };
  auto take_until = [&](std::string_view& s, std::string_view end) {
    auto pos = s.find(end);
    if (pos == std::string_view::npos) fail("unterminated turn");
    std::string content(s.substr(0, pos));
    s.remove_prefix(pos + end.size());
    return content;
  };

  std::string_view s = wire;
  switch (f) {
    case ModelFamily::ChatML:
      while (!detail::consume(s, "<|im_start|>assistant\n")) {
        if (!detail::consume(s, "<|im_start|>")) fail("expected <|im_start|>");
        auto role = take_until(s, "\n");
        p.messages.push_back({role, take_until(s, "<|im_end|>\n")});
      }
      break;
    case ModelFamily::Llama3:
      if (!detail::consume(s, "<|begin_of_text|>")) fail("missing <|begin_of_text|>");
      while (!detail::consume(s, "<|start_header_id|>assistant<|end_header_id|>\n\n")) {
        if (!detail::consume(s, "<|start_header_id|>")) fail("expected header");
        auto role = take_until(s, "<|end_header_id|>\n\n");
        p.messages.push_back({role, take_until(s, "<|eot_id|>")});
      }
      break;
    case ModelFamily::DeepSeekSimple:
      if (!detail::consume(s, "User: ")) fail("missing 'User: '");
      p.messages.push_back({"user", take_until(s, "\n\nAssistant:")});
      break;
    case ModelFamily::Phi3:
      while (!detail::consume(s, "<|assistant|>\n")) {
        std::string role;
        if (detail::consume(s, "<|system|>\n")) role = "system";
        else if (detail::consume(s, "<|user|>\n")) role = "user";
        else fail("expected role tag");
        p.messages.push_back({role, take_until(s, "<|end|>\n")});
      }
      break;
    case ModelFamily::MistralInstruct:
      if (!detail::consume(s, "[INST] ")) fail("missing '[INST] '");
      p.messages.push_back({"user", take_until(s, " [/INST]")});
      break;
  }
  p.assistant_prefix = std::string(s);
  return p;
}

}  // namespace inflight
