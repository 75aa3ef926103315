#include "support.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "codevqa/backends/hashing_embedder.hpp"
#include "codevqa/backends/scripted_lm.hpp"
#include "codevqa/primitives/visual_primitives.hpp"
#include "codevqa/prompting/preamble.hpp"
#include "json.hpp"

#ifndef CODEVQA_SOURCE_DIR
#error "CODEVQA_SOURCE_DIR must point at the repository root"
#endif

namespace codevqa::testing {

namespace fs = std::filesystem;

fs::path data_dir() { return fs::path(CODEVQA_SOURCE_DIR) / "tests" / "data"; }
fs::path repo_data_dir() { return fs::path(CODEVQA_SOURCE_DIR) / "data"; }

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("codevqa-test-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

bool updating_goldens() {
  const char* v = std::getenv("CODEVQA_UPDATE_GOLDENS");
  return v != nullptr && std::string(v) == "1";
}

std::string FakePrimitives::query(const lang::ImageHandle& image, const std::string& question) {
  ++calls;
  if (!on_query) throw lang::PrimitiveError("query not scripted");
  return on_query(image, question);
}

Position FakePrimitives::get_pos(const lang::ImageHandle& image, const std::string& text) {
  ++calls;
  if (!on_get_pos) return {12.0, 12.0};
  return on_get_pos(image, text);
}

lang::ImageHandle FakePrimitives::find_matching_image(const lang::ImageList& images, const std::string&) {
  ++calls;
  if (images.empty()) throw lang::PrimitiveError("no images");
  return images.front();
}

lang::DetectionList FakePrimitives::find_object(const lang::ImageHandle&, const std::string&) {
  ++calls;
  return detections;
}

std::string FakePrimitives::knowledge_query(const std::string& question) {
  ++calls;
  if (!on_knowledge) throw lang::PrimitiveError("knowledge_query not scripted");
  return on_knowledge(question);
}

std::vector<lang::ImageHandle> handles(std::size_t n) {
  std::vector<lang::ImageHandle> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({i, "img" + std::to_string(i) + ".jpg"});
  return out;
}

lang::ExecutionResult run_source(const std::string& source, lang::PrimitiveDispatcher& primitives,
                                 std::size_t num_images, const InterpreterLimits& limits) {
  const lang::Program program = lang::parse_source(source);
  const std::vector<lang::ImageHandle> images = handles(num_images);
  return lang::execute(program, primitives, images, limits);
}

FixtureRig::FixtureRig(harness::FixtureOptions opts)
    : options(opts), set(harness::generate_fixtures(opts)), config(harness::fixture_engine_config(opts)) {
  preamble = prompting::default_preamble(config.flavor, config.extra_primitives);
  store = std::make_shared<const retrieval::ExampleStore>(set.examples, preamble.grammar());
  backends::OracleOptions oracle_options;
  oracle_options.grid_w = config.frame.grid_w;
  oracle_options.grid_h = config.frame.grid_h;
  oracle_options.embed_dim = options.embed_dim;
  oracle = std::make_shared<backends::OracleBackend>(set.scenes, oracle_options);
}

backends::BackendSet FixtureRig::backends() const {
  return {std::make_shared<backends::ScriptedLm>(set.script), oracle, oracle, oracle};
}

backends::BackendSet FixtureRig::backends_with_vision(std::shared_ptr<backends::Backend> vision) const {
  backends::BackendSet b = backends();
  b.vision = vision;
  b.qa_lm = vision;
  return b;
}

harness::Engine FixtureRig::engine(harness::RunMode mode) const { return engine(backends(), mode); }

harness::Engine FixtureRig::engine(backends::BackendSet b, harness::RunMode mode) const {
  return harness::Engine(config, std::move(b), store, preamble, mode);
}

harness::RunResult FixtureRig::run(const harness::Engine& e, std::size_t workers) const {
  harness::RunOptions run_options;
  run_options.workers = workers;
  run_options.seed = config.rng_seed;
  return harness::run_instances(e, set.instances, run_options);
}

namespace {

constexpr int kGoldenEmbedDim = 32;

struct GoldenInputs {
  std::vector<retrieval::Example> examples;
  std::string question;
};

GoldenInputs golden_inputs(DatasetFlavor flavor) {
  const fs::path path = data_dir() / "prompts" /
                        (flavor == DatasetFlavor::kSingleImage ? "gqa_examples.json" : "covr_examples.json");
  const nlohmann::json doc = nlohmann::json::parse(read_file(path));
  GoldenInputs in;
  in.question = doc.at("question").get<std::string>();
  for (const auto& e : doc.at("examples")) {
    retrieval::Example ex;
    ex.id = e.at("id").get<std::string>();
    ex.question = e.at("question").get<std::string>();
    ex.kind = retrieval::ExampleKind::kCode;
    ex.program = e.at("program").get<std::string>();
    ex.embedding = backends::hashing_embedding(ex.question, kGoldenEmbedDim);
    in.examples.push_back(std::move(ex));
  }
  return in;
}

}  // namespace

prompting::RenderedPrompt golden_code_prompt(DatasetFlavor flavor) {
  const EngineConfig config =
      flavor == DatasetFlavor::kSingleImage ? EngineConfig::single_image() : EngineConfig::multi_image();
  const prompting::Preamble preamble = prompting::default_preamble(flavor);
  GoldenInputs in = golden_inputs(flavor);
  const retrieval::ExampleStore store(std::move(in.examples), preamble.grammar());
  primitives::EmbeddingCache embeddings(std::make_shared<backends::HashingEmbedder>(kGoldenEmbedDim));
  std::mt19937_64 rng = seeded_stream(0, 0);
  const auto chosen = primitives::select_examples(store, retrieval::ExampleKind::kCode,
                                                  static_cast<std::size_t>(config.num_code_shots), in.question,
                                                  config, embeddings, rng);
  return prompting::build_code_prompt(preamble, chosen, in.question, config.frame);
}

fs::path golden_prompt_path(DatasetFlavor flavor) {
  return data_dir() / "prompts" /
         (flavor == DatasetFlavor::kSingleImage ? "gqa_code_prompt.golden.txt" : "covr_code_prompt.golden.txt");
}

const std::vector<ScoringCase>& scoring_cases() {
  using harness::ScoreMode;
  const std::vector<std::string> cats3 = {"cat", "dog", "cat", "kitten", "dog", "cat", "dog", "dog", "pet", "dog"};
  const std::vector<std::string> cats2 = {"cat", "dog", "dog", "kitten", "dog", "cat", "dog", "dog", "pet", "dog"};
  const std::vector<std::string> cats1 = {"cat", "dog", "dog", "kitten", "dog", "pet", "dog", "dog", "pet", "dog"};
  const std::vector<std::string> cats5 = {"cat", "cat", "cat", "kitten", "cat", "cat", "dog", "dog", "pet", "dog"};
  static const std::vector<ScoringCase> cases = {
      {"Yes", {"yes"}, ScoreMode::kExact, 1.0, "prediction casing"},
      {"two", {"2"}, ScoreMode::kExact, 0.0, "number word vs digit"},
      {"2", {"2"}, ScoreMode::kExact, 1.0, "digit match"},
      {"YES", {"Yes"}, ScoreMode::kExact, 1.0, "both sides cased"},
      {"no", {"yes"}, ScoreMode::kExact, 0.0, "wrong polarity"},
      {"red", {"blue", "red"}, ScoreMode::kExact, 1.0, "second gold matches"},
      {"green", {"blue", "red"}, ScoreMode::kExact, 0.0, "no gold matches"},
      {"", {"yes"}, ScoreMode::kExact, 0.0, "empty prediction"},
      {"yes ", {"yes"}, ScoreMode::kExact, 0.0, "whitespace is not stripped at scoring"},
      {"Left", {"left"}, ScoreMode::kExact, 1.0, "spatial word casing"},
      {"1.5", {"1.50"}, ScoreMode::kExact, 0.0, "string-level numbers"},
      {"yes", {"no", "yes", "no"}, ScoreMode::kExact, 1.0, "one of several golds"},
      {"cat", {}, ScoreMode::kExact, 0.0, "no golds"},
      {"cat", cats3, ScoreMode::kSoft, 1.0, "three annotators agree"},
      {"cat", cats2, ScoreMode::kSoft, 2.0 / 3.0, "two annotators agree"},
      {"cat", cats1, ScoreMode::kSoft, 1.0 / 3.0, "one annotator agrees"},
      {"bird", cats3, ScoreMode::kSoft, 0.0, "nobody agrees"},
      {"cat", cats5, ScoreMode::kSoft, 1.0, "capped at one"},
      {"Cat", {"cat", "CAT", "dog"}, ScoreMode::kSoft, 2.0 / 3.0, "soft mode lowercases too"},
      {"dog", cats1, ScoreMode::kExact, 1.0, "exact mode ignores the count"},
  };
  return cases;
}

}  // namespace codevqa::testing
