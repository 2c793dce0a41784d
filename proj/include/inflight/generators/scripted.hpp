#pragma once

#include "inflight/generators/backend.hpp"

#include <array>
#include <atomic>
#include <functional>
#include <utility>

namespace inflight {

/// Backend driven by a caller-supplied function. Counts calls per stage.
class FunctionBackend final : public GeneratorBackend {
 public:
  using Fn = std::function<Generation(const GenerationRequest&)>;
  using TruthFn = std::function<std::optional<bool>(std::uint64_t)>;

  explicit FunctionBackend(Fn fn, Capabilities caps = {}, TruthFn truth = {})
      : fn_(std::move(fn)), caps_(caps), truth_(std::move(truth)) {}

  Capabilities capabilities() const override { return caps_; }

  Generation generate(const GenerationRequest& req) override {
    calls_[static_cast<std::size_t>(index_of(req.stage))].fetch_add(1, std::memory_order_relaxed);
    return fn_(req);
  }

  std::optional<bool> ground_truth(std::uint64_t seed) const override {
    return truth_ ? truth_(seed) : std::nullopt;
  }

  int calls(Stage s) const { return calls_[static_cast<std::size_t>(index_of(s))].load(); }

 private:
  Fn fn_;
  Capabilities caps_;
  TruthFn truth_;
  std::array<std::atomic<int>, kStageCount> calls_{};
};

}  // namespace inflight
