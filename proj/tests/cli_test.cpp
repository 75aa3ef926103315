#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "codevqa/cli/commands.hpp"
#include "support/support.hpp"

namespace codevqa::cli {
namespace {

namespace fs = std::filesystem;

struct Captured {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path fixture_dir(const std::string& name, double corrupt = 0.0) {
  const fs::path dir = testing::scratch_dir(name);
  harness::FixtureOptions options;
  options.corrupt_fraction = corrupt;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_fixtures_gen(options, dir, out, err), kExitOk) << err.str();
  return dir;
}

Captured eval(const fs::path& config, Overrides overrides = {}, const std::atomic<bool>* stop = nullptr) {
  std::ostringstream out, err;
  Captured c;
  c.code = cmd_eval(config, overrides, out, err, stop);
  c.out = out.str();
  c.err = err.str();
  return c;
}

void replace_line(const fs::path& config, const std::string& prefix, const std::string& line) {
  std::string text = testing::read_file(config);
  const std::size_t at = text.find("\n" + prefix);
  ASSERT_NE(at, std::string::npos) << prefix;
  const std::size_t end = text.find('\n', at + 1);
  text.replace(at + 1, end - at - 1, line);
  testing::write_file(config, text);
}

TEST(RunConfig, CanonicalFormRoundTrips) {
  const fs::path dir = fixture_dir("cfg_roundtrip");
  const RunConfig config = load_run_config(dir / "run.conf");
  EXPECT_EQ(config.engine.num_code_shots, 6);
  EXPECT_EQ(config.engine.captions_per_image, 3);
  EXPECT_EQ(config.store_path, dir / "store.jsonl");
  const std::string canonical = serialize_run_config(config);
  EXPECT_EQ(parse_run_config(canonical, dir), config);
  EXPECT_EQ(serialize_run_config(parse_run_config(canonical, dir)), canonical);
  EXPECT_EQ(config_hash(config), config_hash(parse_run_config(canonical, dir)));
  EXPECT_EQ(config_hash(config).size(), 64u);
  RunConfig changed = config;
  changed.engine.rng_seed += 1;
  EXPECT_NE(config_hash(changed), config_hash(config));
}

// Parses the fixture config with one line replaced (or added after a
// section header) and returns the error text, or "<accepted>".
std::string config_error(const fs::path& dir, const std::string& prefix, const std::string& line) {
  std::string text = testing::read_file(dir / "run.conf");
  const std::size_t at = text.find("\n" + prefix);
  if (at == std::string::npos) return "<missing " + prefix + ">";
  const std::size_t end = text.find('\n', at + 1);
  if (prefix.starts_with("[")) {
    text.insert(end + 1, line + "\n");
  } else {
    text.replace(at + 1, end - at - 1, line);
  }
  try {
    parse_run_config(text, dir);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "<accepted>";
}

TEST(RunConfig, RejectsLiteralApiKeyWithoutEchoingIt) {
  const fs::path dir = fixture_dir("cfg_key");
  const std::string message = config_error(dir, "api_key =", "api_key = \"sk-live-0123456789\"");
  EXPECT_NE(message.find("backend.api_key"), std::string::npos) << message;
  EXPECT_EQ(message.find("sk-live-0123456789"), std::string::npos) << message;
  EXPECT_EQ(config_error(dir, "api_key =", "api_key = \"${MY_TOKEN}\""), "<accepted>");
  EXPECT_NE(serialize_run_config(load_run_config(dir / "run.conf")).find("api_key = \"${CODEVQA_API_KEY}\""),
            std::string::npos);
}

TEST(RunConfig, NamesTheOffendingField) {
  const fs::path dir = fixture_dir("cfg_fields");
  EXPECT_NE(config_error(dir, "num_code_shots =", "num_code_shots = \"many\"").find("engine.num_code_shots"),
            std::string::npos);
  EXPECT_NE(config_error(dir, "[engine]", "bogus = 1").find("engine.bogus"), std::string::npos);
  EXPECT_NE(config_error(dir, "mode =", "mode = \"sometimes\"").find("mode"), std::string::npos);
  EXPECT_NE(config_error(dir, "workers =", "workers = 0").find("run.workers"), std::string::npos);
  EXPECT_NE(config_error(dir, "vision =", "vision = \"carrier-pigeon\"").find("backend.vision"), std::string::npos);
  EXPECT_NE(config_error(dir, "[engine]", "[engine").find("line"), std::string::npos);
}

TEST(Eval, MissingStoreExitsTwoNamingField) {
  const fs::path dir = fixture_dir("missing_store");
  fs::remove(dir / "store.jsonl");
  const Captured c = eval(dir / "run.conf");
  EXPECT_EQ(c.code, kExitConfig);
  EXPECT_NE(c.err.find("store.path"), std::string::npos) << c.err;
}

TEST(Eval, BrokenStoreExitsThree) {
  const fs::path dir = fixture_dir("broken_store");
  testing::write_file(dir / "store.jsonl", testing::read_file(dir / "store.jsonl") + "{not json\n");
  const Captured c = eval(dir / "run.conf");
  EXPECT_EQ(c.code, kExitDataset);
  EXPECT_NE(c.err.find("line"), std::string::npos) << c.err;
}

TEST(Eval, FixturesScorePerfectly) {
  const fs::path dir = fixture_dir("eval_ok");
  const Captured c = eval(dir / "run.conf");
  ASSERT_EQ(c.code, kExitOk) << c.err;
  const auto report = nlohmann::json::parse(testing::read_file(dir / "out" / "report.json"));
  EXPECT_EQ(report["accuracy"].get<double>(), 1.0);
  EXPECT_EQ(report["total"].get<std::size_t>(), 50u);
  const auto manifest = nlohmann::json::parse(testing::read_file(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["mode"], "codevqa");
  EXPECT_EQ(manifest["seed"].get<std::uint64_t>(), 7u);
  EXPECT_EQ(manifest["config_hash"], config_hash(load_run_config(dir / "run.conf")));
  EXPECT_NE(c.out.find("images  count  accuracy"), std::string::npos) << c.out;
  EXPECT_NE(c.out.find("question type  count  accuracy"), std::string::npos) << c.out;
  std::size_t traces = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "out" / "traces")) ++traces;
  EXPECT_EQ(traces, 50u);
}

TEST(Eval, BaselineModeIsRecordedInManifest) {
  const fs::path dir = fixture_dir("eval_baseline");
  Overrides o;
  o.mode = "baseline-always-fallback";
  o.output = dir / "baseline";
  const Captured c = eval(dir / "run.conf", o);
  ASSERT_EQ(c.code, kExitOk) << c.err;
  const auto manifest = nlohmann::json::parse(testing::read_file(dir / "baseline" / "manifest.json"));
  EXPECT_EQ(manifest["mode"], "baseline-always-fallback");
  const auto report = nlohmann::json::parse(testing::read_file(dir / "baseline" / "report.json"));
  EXPECT_EQ(report["fallback_rate"].get<double>(), 1.0);
}

TEST(Eval, InterruptWritesPartialReport) {
  const fs::path dir = fixture_dir("eval_stop");
  std::atomic<bool> stop{true};
  const Captured c = eval(dir / "run.conf", {}, &stop);
  EXPECT_EQ(c.code, kExitInterrupted);
  const auto report = nlohmann::json::parse(testing::read_file(dir / "out" / "report.json"));
  EXPECT_TRUE(report["partial"].get<bool>());
}

TEST(Eval, TokenNeverReachesOutputs) {
  const fs::path dir = fixture_dir("eval_secret");
  const std::string token = "tok-5f2d9e1a7c";
  ::setenv("CODEVQA_API_KEY", token.c_str(), 1);
  const Captured c = eval(dir / "run.conf");
  ::unsetenv("CODEVQA_API_KEY");
  ASSERT_EQ(c.code, kExitOk) << c.err;
  EXPECT_EQ(c.out.find(token), std::string::npos);
  EXPECT_EQ(c.err.find(token), std::string::npos);
  EXPECT_EQ(testing::read_file(dir / "run.conf").find(token), std::string::npos);
  for (const auto& e : fs::recursive_directory_iterator(dir / "out")) {
    if (e.is_regular_file()) EXPECT_EQ(testing::read_file(e.path()).find(token), std::string::npos) << e.path();
  }
}

TEST(Ask, UnreachableEndpointExitsFour) {
  const fs::path dir = fixture_dir("ask_unreachable");
  replace_line(dir / "run.conf", "vision =", "vision = \"http://127.0.0.1:1\"");
  replace_line(dir / "run.conf", "qa_lm =", "qa_lm = \"http://127.0.0.1:1\"");
  replace_line(dir / "run.conf", "max_attempts =", "max_attempts = 1");
  replace_line(dir / "run.conf", "timeout_ms =", "timeout_ms = 500");
  std::ostringstream out, err;
  const int code = cmd_ask(dir / "run.conf", {}, "Is there a dog?", {"scene-000.jpg"}, out, err);
  EXPECT_EQ(code, kExitUnreachable) << out.str() << err.str();
  EXPECT_NE(err.str().find("127.0.0.1:1"), std::string::npos) << err.str();
}

TEST(Ask, AnswersOneQuestionWithTrace) {
  const fs::path dir = fixture_dir("ask_ok");
  const auto scenes = nlohmann::json::parse(testing::read_file(dir / "scenes.json"));
  const nlohmann::json& first = scenes.is_array() ? scenes[0] : scenes["scenes"][0];
  const std::string ref = first["image_ref"];
  const std::string noun = first["objects"][0]["name"];
  std::ostringstream out, err;
  const int code = cmd_ask(dir / "run.conf", {}, "Is there a " + noun + "?", {ref}, out, err);
  ASSERT_EQ(code, kExitOk) << err.str();
  EXPECT_NE(out.str().find("yes"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("fallback_used"), std::string::npos) << out.str();
}

TEST(Parse, RejectsWhileLoopWithExitFive) {
  const fs::path dir = testing::scratch_dir("parse_cmd");
  testing::write_file(dir / "loop.py", "while True: pass\n");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_parse(dir / "loop.py", false, out, err), kExitParse);
  EXPECT_NE(err.str().find("while"), std::string::npos) << err.str();
}

TEST(Parse, ReferenceProgramsParse) {
  for (const char* name : {"bench_silver_metallic.py", "pink_shoes.py", "ladies_men.py", "carriage_right_of_horse.py"}) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_parse(testing::repo_data_dir() / "programs" / name, false, out, err), kExitOk) << name << err.str();
    EXPECT_FALSE(out.str().empty());
    std::ostringstream json_out;
    EXPECT_EQ(cmd_parse(testing::repo_data_dir() / "programs" / name, true, json_out, err), kExitOk);
    EXPECT_TRUE(nlohmann::json::accept(json_out.str()));
  }
}

TEST(FixturesGen, SameSeedSameFiles) {
  const fs::path a = fixture_dir("gen_a", 0.2);
  const fs::path b = fixture_dir("gen_b", 0.2);
  for (const char* file : {"scenes.json", "instances.jsonl", "script.json", "store.jsonl", "fixtures.json"}) {
    EXPECT_EQ(testing::read_file(a / file), testing::read_file(b / file)) << file;
  }
}

}  // namespace
}  // namespace codevqa::cli
