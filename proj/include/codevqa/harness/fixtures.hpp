#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "codevqa/backends/scene_graph.hpp"
#include "codevqa/backends/scripted_lm.hpp"
#include "codevqa/core/types.hpp"
#include "codevqa/retrieval/example_store.hpp"

namespace codevqa::harness {

struct FixtureOptions {
  std::uint64_t seed = 7;
  std::size_t instances = 50;
  // Share of scripted programs replaced by a runtime-erroring variant;
  // exactly round(instances * fraction) of them.
  double corrupt_fraction = 0.0;
  std::size_t code_examples = 50;
  std::size_t qa_examples = 24;
  int embed_dim = 64;
  int grid = 24;
};

struct FixtureSet {
  backends::SceneLibrary scenes;
  std::vector<VQAInstance> instances;
  backends::Script script;
  std::vector<retrieval::Example> examples;
  // Instance ids whose program was corrupted, in instance order.
  std::vector<std::string> corrupted;
};

// Synthetic scenes, instances over them (1 to 5 images each), a script of
// programs that are correct by construction and an example store. Gold
// answers are computed from the generated scenes directly, never through the
// oracle. Same options, same output.
FixtureSet generate_fixtures(const FixtureOptions& options);

// A copy of `program` that always ends in a runtime error. Variant selects
// the failure: failed int() conversion, unbound name, type mismatch,
// division by zero.
std::string corrupt_program(const std::string& program, std::size_t variant);

// Engine settings the fixtures are built for: multi-image flavor with
// find_object enabled, on the scene grid.
EngineConfig fixture_engine_config(const FixtureOptions& options);

// scenes.json, instances.jsonl, script.json, store.jsonl, fixtures.json.
void write_fixtures(const std::filesystem::path& dir, const FixtureSet& set, const FixtureOptions& options);

}  // namespace codevqa::harness
