#include "codevqa/harness/runner.hpp"

#include <fstream>
#include <thread>

#include "codevqa/backends/cached_backend.hpp"

namespace codevqa::harness {

RunResult run_instances(const Engine& engine, const std::vector<VQAInstance>& instances, const RunOptions& options) {
  RunResult result;
  result.outcomes.resize(instances.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stopped{false};

  auto work = [&] {
    for (;;) {
      if (options.stop != nullptr && options.stop->load()) {
        stopped = true;
        return;
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= instances.size()) return;
      result.outcomes[i] = engine.answer_instance(instances[i], instance_seed(options.seed, i));
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, instances.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::vector<AnswerRecord> records;
  std::vector<VQAInstance> answered;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!result.outcomes[i]) continue;
    records.push_back(result.outcomes[i]->record);
    answered.push_back(instances[i]);
  }
  result.report = evaluate(records, answered, options.score_mode);
  result.report.partial = stopped.load() || answered.size() != instances.size();
  return result;
}

nlohmann::json manifest_json(const Engine& engine, const RunResult& result, const RunOptions& options) {
  std::size_t completed = 0;
  for (const auto& o : result.outcomes) completed += o.has_value() ? 1 : 0;
  return {{"engine_version", backends::kEngineVersion},
          {"config_hash", options.config_hash},
          {"seed", options.seed},
          {"mode", to_string(engine.mode())},
          {"retrieval", to_string(engine.config().retrieval)},
          {"flavor", to_string(engine.config().flavor)},
          {"score_mode", to_string(options.score_mode)},
          {"instances", result.outcomes.size()},
          {"completed", completed},
          {"partial", result.report.partial}};
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

void write_outputs(const std::filesystem::path& dir, const Engine& engine, const RunResult& result,
                   const RunOptions& options) {
  std::filesystem::create_directories(dir / "traces");
  write_text(dir / "report.json", to_json(result.report).dump(2) + "\n");
  write_text(dir / "manifest.json", manifest_json(engine, result, options).dump(2) + "\n");
  std::string timings;
  for (const auto& o : result.outcomes) {
    if (!o) continue;
    write_text(dir / o->record.trace_ref, to_json(o->trace).dump(2) + "\n");
    timings += timings_json(o->trace).dump() + "\n";
  }
  write_text(dir / "timings.jsonl", timings);
}

}  // namespace codevqa::harness
