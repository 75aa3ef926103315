#include <atomic>
#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "codevqa/cli/commands.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_interrupt(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  using namespace codevqa::cli;

  CLI::App app{"Answer visual questions with generated programs."};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::string mode;
  std::string retrieval;
  std::string output;
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration file")->required();
    cmd->add_option("--seed", seed, "Seed for every random choice");
    cmd->add_option("--mode", mode, "codevqa or baseline-always-fallback");
    cmd->add_option("--retrieval", retrieval, "embedding or random");
    cmd->add_option("--workers", workers, "Instances answered concurrently");
    cmd->add_option("--output", output, "Output directory");
  };

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a dataset and write report, traces and manifest");
  add_run_flags(eval);

  CLI::App* ask = app.add_subcommand("ask", "Answer one question");
  add_run_flags(ask);
  std::string question;
  std::vector<std::string> images;
  ask->add_option("question", question, "Question text")->required();
  ask->add_option("--image", images, "Image reference (repeatable)")->required();

  CLI::App* parse = app.add_subcommand("parse", "Parse a program and print its syntax tree");
  std::string source;
  bool as_json = false;
  parse->add_option("source", source, "Program file")->required();
  parse->add_flag("--json", as_json, "Print the tree as JSON");

  CLI::App* fixtures = app.add_subcommand("fixtures", "Synthetic test data");
  fixtures->require_subcommand(1);
  CLI::App* gen = fixtures->add_subcommand("gen", "Generate scenes, instances, a script and an example store");
  codevqa::harness::FixtureOptions fixture_options;
  std::string fixture_dir = "fixtures";
  gen->add_option("--seed", fixture_options.seed, "Generator seed");
  gen->add_option("-n,--n", fixture_options.instances, "Number of instances");
  gen->add_option("--corrupt", fixture_options.corrupt_fraction, "Share of programs made to fail at runtime");
  gen->add_option("--output", fixture_dir, "Output directory");

  CLI::App* serve = app.add_subcommand("serve-mock", "Serve the scene-graph oracle over the wire protocol");
  std::string scenes;
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--scenes", scenes, "Scene file")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  auto collect = [&](CLI::App* cmd) {
    if (cmd->count("--seed") > 0) overrides.seed = seed;
    if (cmd->count("--mode") > 0) overrides.mode = mode;
    if (cmd->count("--retrieval") > 0) overrides.retrieval = retrieval;
    if (cmd->count("--workers") > 0) overrides.workers = workers;
    if (cmd->count("--output") > 0) overrides.output = output;
  };

  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);

  if (eval->parsed()) {
    collect(eval);
    return cmd_eval(config_path, overrides, std::cout, std::cerr, &g_stop);
  }
  if (ask->parsed()) {
    collect(ask);
    return cmd_ask(config_path, overrides, question, images, std::cout, std::cerr);
  }
  if (parse->parsed()) return cmd_parse(source, as_json, std::cout, std::cerr);
  if (gen->parsed()) return cmd_fixtures_gen(fixture_options, fixture_dir, std::cout, std::cerr);
  if (serve->parsed()) return cmd_serve_mock(scenes, host, port, std::cout, std::cerr, g_stop);
  return kExitFailure;
}
