#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "codevqa/harness/engine.hpp"
#include "codevqa/harness/evaluation.hpp"

namespace codevqa::harness {

struct RunOptions {
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  ScoreMode score_mode = ScoreMode::kExact;
  // Written verbatim into manifest.json.
  std::string config_hash;
  // When set, workers stop picking up new instances once it turns true;
  // in-flight instances finish and the report is flagged partial.
  const std::atomic<bool>* stop = nullptr;
};

struct RunResult {
  // Index-aligned with the input; empty for instances skipped by a stop.
  std::vector<std::optional<AnswerOutcome>> outcomes;
  EvalReport report;
};

// Answers every instance on a worker pool. Instance i always runs with seed
// instance_seed(options.seed, i), so the result does not depend on the worker
// count or the schedule.
RunResult run_instances(const Engine& engine, const std::vector<VQAInstance>& instances, const RunOptions& options);

nlohmann::json manifest_json(const Engine& engine, const RunResult& result, const RunOptions& options);

// report.json, manifest.json, timings.jsonl and traces/<id>.json under `dir`.
// Everything except timings.jsonl is byte-identical across runs with the same
// inputs and seed.
void write_outputs(const std::filesystem::path& dir, const Engine& engine, const RunResult& result,
                   const RunOptions& options);

}  // namespace codevqa::harness
