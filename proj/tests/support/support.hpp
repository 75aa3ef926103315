#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "codevqa/backends/oracle_backend.hpp"
#include "codevqa/harness/engine.hpp"
#include "codevqa/harness/evaluation.hpp"
#include "codevqa/harness/fixtures.hpp"
#include "codevqa/harness/runner.hpp"
#include "codevqa/lang/interpreter.hpp"
#include "codevqa/prompting/prompts.hpp"

namespace codevqa::testing {

// Checked-in test data (tests/data).
std::filesystem::path data_dir();
// Shipped repository data (data/).
std::filesystem::path repo_data_dir();

// Empty scratch directory unique to `name`, recreated on every call.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

// Goldens are rewritten instead of compared when CODEVQA_UPDATE_GOLDENS=1.
bool updating_goldens();

// Dispatcher whose replies come from plain functions; counts every call.
class FakePrimitives : public lang::PrimitiveDispatcher {
 public:
  std::function<std::string(const lang::ImageHandle&, const std::string&)> on_query;
  std::function<Position(const lang::ImageHandle&, const std::string&)> on_get_pos;
  std::function<std::string(const std::string&)> on_knowledge;
  lang::DetectionList detections;
  int calls = 0;

  std::string query(const lang::ImageHandle& image, const std::string& question) override;
  Position get_pos(const lang::ImageHandle& image, const std::string& text) override;
  lang::ImageHandle find_matching_image(const lang::ImageList& images, const std::string& text) override;
  lang::DetectionList find_object(const lang::ImageHandle& image, const std::string& description) override;
  std::string knowledge_query(const std::string& question) override;
};

std::vector<lang::ImageHandle> handles(std::size_t n);

lang::ExecutionResult run_source(const std::string& source, lang::PrimitiveDispatcher& primitives,
                                 std::size_t num_images = 1, const InterpreterLimits& limits = {});

// A generated fixture set plus everything needed to build engines over it.
struct FixtureRig {
  harness::FixtureOptions options;
  harness::FixtureSet set;
  EngineConfig config;
  prompting::Preamble preamble;
  std::shared_ptr<const retrieval::ExampleStore> store;
  std::shared_ptr<backends::OracleBackend> oracle;

  explicit FixtureRig(harness::FixtureOptions options);

  backends::BackendSet backends() const;
  // Vision and QA roles replaced, code LM and embedder kept.
  backends::BackendSet backends_with_vision(std::shared_ptr<backends::Backend> vision) const;
  harness::Engine engine(harness::RunMode mode = harness::RunMode::kCodeVqa) const;
  harness::Engine engine(backends::BackendSet set, harness::RunMode mode = harness::RunMode::kCodeVqa) const;
  harness::RunResult run(const harness::Engine& engine, std::size_t workers = 1) const;
};

// Code prompts for the golden files: examples from tests/data/prompts picked
// by top_k over hashing embeddings, shot count from the flavor preset.
prompting::RenderedPrompt golden_code_prompt(DatasetFlavor flavor);
std::filesystem::path golden_prompt_path(DatasetFlavor flavor);

// Hand-labeled scorer cases; `expected` was worked out by hand from the
// lowercase exact-match rule and min(matches / 3, 1).
struct ScoringCase {
  std::string predicted;
  std::vector<std::string> golds;
  harness::ScoreMode mode;
  double expected;
  std::string note;
};

const std::vector<ScoringCase>& scoring_cases();

}  // namespace codevqa::testing
