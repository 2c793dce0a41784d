#pragma once

#include "inflight/core/types.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace inflight {

struct SamplingParams {
  double temperature = 0.0;
  std::int64_t max_tokens = 1024;
  std::vector<std::string> stop;
};

/// One generation call. `assistant_prefix` is non-empty when continuing a
/// partial answer; the returned text then holds only the continuation.
struct GenerationRequest {
  Stage stage = Stage::Problem;
  std::optional<std::string> system;
  std::string user;
  std::string assistant_prefix;
  SamplingParams params;
  std::uint64_t trajectory_seed = 0;  // identifies the trajectory
  std::uint64_t seed = 0;             // per-call sub-seed
};

struct Generation {
  std::string text;
  std::int64_t tokens = 0;         // completion tokens
  std::int64_t prompt_tokens = 0;  // as reported; 0 when unknown
  bool finished = true;            // false when cut by max_tokens
};

struct Capabilities {
  bool supports_continuation = true;
  bool reports_token_counts = true;
};

struct BackendError : std::runtime_error {
  explicit BackendError(const std::string& what, bool unreachable = false)
      : std::runtime_error(what), unreachable(unreachable) {}
  bool unreachable;
};

class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;
  virtual Capabilities capabilities() const = 0;
  /// Must be safe to call concurrently.
  virtual Generation generate(const GenerationRequest& req) = 0;
  /// Ground-truth quality label for a trajectory, when the backend knows it.
  virtual std::optional<bool> ground_truth(std::uint64_t /*trajectory_seed*/) const {
    return std::nullopt;
  }
};

/// Rejects generations without a positive token count.
inline Generation checked(Generation g) {
  if (g.tokens < 1) throw BackendError("backend returned a generation with no tokens");
  return g;
}

}  // namespace inflight
