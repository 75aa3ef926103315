#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "codevqa/backends/backend.hpp"
#include "codevqa/cli/run_config.hpp"
#include "codevqa/harness/fixtures.hpp"

namespace codevqa::cli {

// The process-level contract.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDataset = 3,
  kExitUnreachable = 4,
  kExitParse = 5,
  kExitInterrupted = 130,
};

// Command-line flags that override the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> retrieval;
  std::optional<std::size_t> workers;
  std::optional<std::filesystem::path> output;
};

RunConfig apply_overrides(RunConfig config, const Overrides& overrides);

struct BuiltBackends {
  backends::BackendSet set;
  // HTTP clients among them, probed with describe() before a run.
  std::vector<std::shared_ptr<backends::Backend>> remote;
};

// Roles with the same spec share one instance. embed_dim sizes oracle and
// hashing embedders (usually the example store's dimension).
BuiltBackends build_backends(const RunConfig& config, std::size_t embed_dim);

int cmd_eval(const std::filesystem::path& config_path, const Overrides& overrides, std::ostream& out,
             std::ostream& err, const std::atomic<bool>* stop = nullptr);

int cmd_ask(const std::filesystem::path& config_path, const Overrides& overrides, const std::string& question,
            const std::vector<std::string>& image_refs, std::ostream& out, std::ostream& err);

int cmd_parse(const std::filesystem::path& source, bool as_json, std::ostream& out, std::ostream& err);

// Writes the fixture files plus run.conf, a ready-to-run config over them.
int cmd_fixtures_gen(const harness::FixtureOptions& options, const std::filesystem::path& dir, std::ostream& out,
                     std::ostream& err);

// Serves the scene-graph oracle over the wire protocol until *stop is set.
int cmd_serve_mock(const std::filesystem::path& scenes, const std::string& host, int port, std::ostream& out,
                   std::ostream& err, const std::atomic<bool>& stop);

}  // namespace codevqa::cli
