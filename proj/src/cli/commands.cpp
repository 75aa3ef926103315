#include "codevqa/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "codevqa/backends/backend_server.hpp"
#include "codevqa/backends/cached_backend.hpp"
#include "codevqa/backends/hashing_embedder.hpp"
#include "codevqa/backends/http_backend.hpp"
#include "codevqa/backends/oracle_backend.hpp"
#include "codevqa/backends/scripted_lm.hpp"
#include "codevqa/harness/runner.hpp"
#include "codevqa/lang/ast_dump.hpp"
#include "codevqa/lang/token.hpp"

namespace codevqa::cli {

namespace fs = std::filesystem;

RunConfig apply_overrides(RunConfig config, const Overrides& o) {
  if (o.seed) config.engine.rng_seed = *o.seed;
  if (o.mode) config.mode = harness::run_mode_from_string(*o.mode);
  if (o.retrieval) config.engine.retrieval = retrieval_mode_from_string(*o.retrieval);
  if (o.workers) {
    if (*o.workers == 0) throw ConfigError("--workers", "must be positive");
    config.workers = *o.workers;
  }
  if (o.output) config.output_dir = fs::absolute(*o.output).lexically_normal();
  return config;
}

BuiltBackends build_backends(const RunConfig& config, std::size_t embed_dim) {
  BuiltBackends built;
  std::map<std::string, std::shared_ptr<backends::Backend>> by_spec;
  const int dim = static_cast<int>(embed_dim);

  auto make = [&](const std::string& spec, const std::string& field) -> std::shared_ptr<backends::Backend> {
    if (auto it = by_spec.find(spec); it != by_spec.end()) return it->second;
    std::shared_ptr<backends::Backend> backend;
    try {
      if (spec.starts_with("oracle:")) {
        backends::OracleOptions options;
        options.grid_w = config.engine.frame.grid_w;
        options.grid_h = config.engine.frame.grid_h;
        options.embed_dim = dim;
        backend = std::make_shared<backends::OracleBackend>(backends::load_scenes(spec.substr(7)), options);
      } else if (spec.starts_with("scripted:")) {
        backend = std::make_shared<backends::ScriptedLm>(backends::load_script(spec.substr(9)));
      } else if (spec == "hashing" || spec.starts_with("hashing:")) {
        int d = dim;
        if (spec.size() > 8) {
          try {
            d = std::stoi(spec.substr(8));
          } catch (const std::exception&) {
            throw ConfigError(field, "hashing dimension must be an integer");
          }
        }
        backend = std::make_shared<backends::HashingEmbedder>(d);
      } else {
        backends::HttpOptions options;
        options.base_url = spec;
        options.timeout_ms = config.backends.timeout_ms;
        options.max_attempts = config.backends.max_attempts;
        options.api_key_env = config.backends.api_key_env;
        options.max_in_flight = config.backends.max_in_flight;
        backend = std::make_shared<backends::HttpBackend>(options);
        built.remote.push_back(backend);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(field, e.what());
    }
    by_spec.emplace(spec, backend);
    return backend;
  };

  auto role = [&](const std::string& spec, const std::string& field, const std::string& model) {
    std::shared_ptr<backends::Backend> backend = make(spec, field);
    if (config.backends.cache_dir.empty()) return backend;
    return std::shared_ptr<backends::Backend>(
        std::make_shared<backends::CachedBackend>(backend, config.backends.cache_dir, spec + "|" + model));
  };
  built.set.code_lm = role(config.backends.code_lm, "backend.code_lm", config.engine.code_model);
  built.set.qa_lm = role(config.backends.qa_lm, "backend.qa_lm", config.engine.qa_model);
  built.set.vision = role(config.backends.vision, "backend.vision", "vision");
  built.set.embedder = role(config.backends.embedder, "backend.embedder", "embedder");
  return built;
}

namespace {

// Everything a run needs, loaded in the order whose failures map to the
// exit codes: config (2), dataset and store (3), backends (4).
struct Session {
  RunConfig config;
  std::shared_ptr<const retrieval::ExampleStore> store;
  std::vector<VQAInstance> instances;
  std::unique_ptr<harness::Engine> engine;
};

class ExitWith : public std::exception {
 public:
  explicit ExitWith(int code) : code_(code) {}
  int code() const { return code_; }
  const char* what() const noexcept override { return "exit"; }

 private:
  int code_;
};

Session open_session(const fs::path& config_path, const Overrides& overrides, bool load_instances, std::ostream& err) {
  Session s;
  try {
    s.config = apply_overrides(load_run_config(config_path), overrides);
    validate_run_config(s.config);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    throw ExitWith(kExitConfig);
  }

  prompting::Preamble preamble;
  try {
    const auto& e = s.config.engine;
    preamble = s.config.preamble_path.empty()
                   ? prompting::default_preamble(e.flavor, e.extra_primitives)
                   : prompting::load_preamble(s.config.preamble_path, e.flavor, e.extra_primitives);
  } catch (const Error& e) {
    err << "config error: store.preamble: " << e.what() << "\n";
    throw ExitWith(kExitConfig);
  }

  try {
    s.store = std::make_shared<const retrieval::ExampleStore>(retrieval::load_store(s.config.store_path, preamble.grammar()));
    if (load_instances) s.instances = harness::load_dataset(s.config.dataset_path, s.config.dataset_format);
  } catch (const Error& e) {
    err << "dataset error: " << e.what() << "\n";
    throw ExitWith(kExitDataset);
  }

  BuiltBackends built;
  try {
    built = build_backends(s.config, s.store->dimension());
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    throw ExitWith(kExitConfig);
  }
  for (const auto& remote : built.remote) {
    try {
      remote->describe();
    } catch (const backends::BackendError& e) {
      const auto http = std::dynamic_pointer_cast<backends::HttpBackend>(remote);
      err << "backend unreachable" << (http ? " at " + http->base_url() : std::string()) << ": " << e.what() << "\n";
      throw ExitWith(kExitUnreachable);
    }
  }

  try {
    s.engine = std::make_unique<harness::Engine>(s.config.engine, built.set, s.store, std::move(preamble), s.config.mode);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    throw ExitWith(kExitConfig);
  }
  return s;
}

std::string percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

}  // namespace

int cmd_eval(const fs::path& config_path, const Overrides& overrides, std::ostream& out, std::ostream& err,
             const std::atomic<bool>* stop) {
  try {
    Session s = open_session(config_path, overrides, true, err);
    harness::RunOptions options;
    options.workers = s.config.workers;
    options.seed = s.config.engine.rng_seed;
    options.score_mode = s.config.score_mode;
    options.config_hash = config_hash(s.config);
    options.stop = stop;

    const harness::RunResult result = harness::run_instances(*s.engine, s.instances, options);
    harness::write_outputs(s.config.output_dir, *s.engine, result, options);

    const harness::EvalReport& r = result.report;
    out << "accuracy: " << percent(r.accuracy()) << " (" << r.correct << "/" << r.total << ")\n";
    out << "fallback rate: " << percent(r.fallback_rate()) << " (" << r.fallback_count << "/" << r.total << ")\n\n";
    out << harness::format_breakdown("images", harness::breakdown(r, "num_images")) << "\n";
    out << harness::format_breakdown("question type", harness::breakdown(r, "question_type")) << "\n";
    out << "report: " << (s.config.output_dir / "report.json").string() << "\n";
    if (r.partial) {
      err << "interrupted: report covers " << r.total << " of " << s.instances.size() << " instances (partial)\n";
      return kExitInterrupted;
    }
    return kExitOk;
  } catch (const ExitWith& e) {
    return e.code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_ask(const fs::path& config_path, const Overrides& overrides, const std::string& question,
            const std::vector<std::string>& image_refs, std::ostream& out, std::ostream& err) {
  try {
    if (image_refs.empty()) {
      err << "config error: ask needs at least one image\n";
      return kExitConfig;
    }
    Session s = open_session(config_path, overrides, false, err);
    VQAInstance instance;
    instance.id = "ask";
    instance.text = question;
    instance.image_refs = image_refs;
    instance.dataset = "ask";
    const harness::AnswerOutcome outcome = s.engine->answer_instance(instance, s.config.engine.rng_seed);

    const fs::path trace_path = s.config.output_dir / outcome.record.trace_ref;
    fs::create_directories(trace_path.parent_path());
    std::ofstream(trace_path, std::ios::binary) << harness::to_json(outcome.trace).dump(2) << "\n";

    out << "answer: " << outcome.record.predicted << "\n";
    out << "fallback_used: " << (outcome.record.used_fallback ? "true" : "false") << "\n";
    if (outcome.trace.fallback_reason) out << "fallback_reason: " << *outcome.trace.fallback_reason << "\n";
    if (!outcome.trace.program.empty()) out << "program:\n" << outcome.trace.program;
    out << "trace: " << trace_path.string() << "\n";
    // A backend that died mid-run looks like a failed fallback.
    if (outcome.trace.failure) {
      err << "failure: " << *outcome.trace.failure << "\n";
      for (const auto& remote : build_backends(s.config, s.store->dimension()).remote) {
        try {
          remote->describe();
        } catch (const backends::BackendError&) {
          return kExitUnreachable;
        }
      }
    }
    return kExitOk;
  } catch (const ExitWith& e) {
    return e.code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_parse(const fs::path& source, bool as_json, std::ostream& out, std::ostream& err) {
  std::ifstream in(source, std::ios::binary);
  if (!in) {
    err << "error: cannot read " << source.string() << "\n";
    return kExitFailure;
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    const lang::Program program = lang::parse_source(text.str());
    if (as_json) {
      out << lang::dump_json(program).dump(2) << "\n";
    } else {
      out << lang::dump_text(program);
    }
    return kExitOk;
  } catch (const lang::UnsupportedSyntax& e) {
    err << source.string() << ":" << e.what() << "\n";
    return kExitParse;
  } catch (const lang::LexError& e) {
    err << source.string() << ": " << e.what() << "\n";
    return kExitParse;
  }
}

int cmd_fixtures_gen(const harness::FixtureOptions& options, const fs::path& dir, std::ostream& out, std::ostream& err) {
  try {
    const harness::FixtureSet set = harness::generate_fixtures(options);
    harness::write_fixtures(dir, set, options);

    RunConfig config;
    config.engine = harness::fixture_engine_config(options);
    config.dataset_path = "instances.jsonl";
    config.store_path = "store.jsonl";
    config.backends.code_lm = "scripted:script.json";
    config.backends.qa_lm = "oracle:scenes.json";
    config.backends.vision = "oracle:scenes.json";
    config.backends.embedder = "oracle:scenes.json";
    config.output_dir = "out";
    config.workers = 4;
    std::ofstream conf(dir / "run.conf", std::ios::binary);
    conf << "# Fixture run: scripted code LM, scene-graph oracle for everything else.\n" << serialize_run_config(config);
    if (!conf) throw Error("cannot write " + (dir / "run.conf").string());

    out << "wrote " << set.instances.size() << " instances over " << set.scenes.size() << " scenes to "
        << dir.string() << "\n";
    if (!set.corrupted.empty()) out << "corrupted programs: " << set.corrupted.size() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_serve_mock(const fs::path& scenes, const std::string& host, int port, std::ostream& out, std::ostream& err,
                   const std::atomic<bool>& stop) {
  try {
    auto oracle = std::make_shared<backends::OracleBackend>(backends::load_scenes(scenes));
    backends::BackendServer server(oracle);
    const int bound = server.start(host, port);
    out << "listening on " << host << ":" << bound << "\n" << std::flush;
    while (!stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace codevqa::cli
