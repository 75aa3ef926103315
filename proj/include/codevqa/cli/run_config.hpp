#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "codevqa/core/types.hpp"
#include "codevqa/harness/dataset.hpp"
#include "codevqa/harness/engine.hpp"
#include "codevqa/harness/evaluation.hpp"

namespace codevqa::cli {

// Backend spec strings, one per role:
//   oracle:<scenes.json>     scene-graph oracle (any role)
//   scripted:<script.json>   scripted code LM
//   hashing[:<dim>]          hashing embedder
//   http://host:port         wire-protocol client
struct BackendConfig {
  std::string code_lm;
  std::string qa_lm;
  std::string vision;
  std::string embedder;
  // Environment variable holding the bearer token, written in the file as
  // api_key = "${NAME}". Literal keys are rejected.
  std::string api_key_env = "CODEVQA_API_KEY";
  std::filesystem::path cache_dir;
  int timeout_ms = 30000;
  int max_attempts = 3;
  int max_in_flight = 8;
  bool operator==(const BackendConfig&) const = default;
};

struct RunConfig {
  EngineConfig engine;
  std::filesystem::path dataset_path;
  harness::DatasetFormat dataset_format = harness::DatasetFormat::kNormalized;
  std::filesystem::path store_path;
  // Empty: the built-in preamble for engine.flavor.
  std::filesystem::path preamble_path;
  BackendConfig backends;
  std::filesystem::path output_dir = "codevqa-out";
  std::size_t workers = 1;
  harness::RunMode mode = harness::RunMode::kCodeVqa;
  harness::ScoreMode score_mode = harness::ScoreMode::kExact;
  bool operator==(const RunConfig&) const = default;
};

// TOML-like: "[section]" headers, "key = <JSON value>" lines, "#" comments.
// Relative paths (and paths inside backend specs) resolve against base_dir.
// Throws ConfigError naming the offending field.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical form: every field, fixed section and key order. Re-parses equal.
std::string serialize_run_config(const RunConfig& config);

// SHA-256 of the canonical form.
std::string config_hash(const RunConfig& config);

// Every referenced file must exist; throws ConfigError naming the field.
void validate_run_config(const RunConfig& config);

}  // namespace codevqa::cli
