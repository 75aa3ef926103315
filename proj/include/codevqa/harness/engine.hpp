#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "codevqa/backends/backend.hpp"
#include "codevqa/core/types.hpp"
#include "codevqa/harness/trace.hpp"
#include "codevqa/primitives/visual_primitives.hpp"
#include "codevqa/prompting/preamble.hpp"
#include "codevqa/retrieval/example_store.hpp"

namespace codevqa::harness {

enum class RunMode { kCodeVqa, kBaseline };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& text);

// Per-instance seed; results never depend on which worker ran which instance.
inline std::uint64_t instance_seed(std::uint64_t run_seed, std::size_t index) {
  return run_seed ^ static_cast<std::uint64_t>(index);
}

// Random streams derived from an instance seed. The fallback stream is shared
// by the fallback branch and baseline mode, which is what makes the two
// agree seed-for-seed.
inline constexpr std::uint64_t kCodeStream = 1;
inline constexpr std::uint64_t kProgramStream = 2;
inline constexpr std::uint64_t kFallbackStream = 3;

struct AnswerOutcome {
  AnswerRecord record;
  Trace trace;
};

// generate -> extract -> parse -> execute, falling back to the five-step
// query procedure on any failure. Safe to call concurrently.
class Engine {
 public:
  Engine(EngineConfig config, backends::BackendSet backends, std::shared_ptr<const retrieval::ExampleStore> store,
         prompting::Preamble preamble, RunMode mode);

  // Never throws. A total failure yields answer "" with trace.failure set.
  AnswerOutcome answer_instance(const VQAInstance& instance, std::uint64_t seed) const;

  const EngineConfig& config() const { return config_; }
  RunMode mode() const { return mode_; }
  const prompting::Preamble& preamble() const { return preamble_; }

 private:
  void run_program(const VQAInstance& instance, std::uint64_t seed, Trace& trace) const;
  void run_fallback(const VQAInstance& instance, std::uint64_t seed, Trace& trace) const;

  EngineConfig config_;
  backends::BackendSet backends_;
  std::shared_ptr<const retrieval::ExampleStore> store_;
  prompting::Preamble preamble_;
  RunMode mode_;
  std::unique_ptr<primitives::EmbeddingCache> embeddings_;
};

}  // namespace codevqa::harness
