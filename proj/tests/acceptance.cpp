// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "codevqa/backends/scripted_lm.hpp"
#include "codevqa/core/random.hpp"
#include "codevqa/gradcam/gradcam.hpp"
#include "codevqa/harness/evaluation.hpp"
#include "codevqa/lang/ast.hpp"
#include "codevqa/lang/interpreter.hpp"
#include "codevqa/lang/token.hpp"
#include "codevqa/retrieval/example_store.hpp"
#include "support/support.hpp"

namespace {

using namespace codevqa;
namespace fs = std::filesystem;

// Thrown by a check to fail the current criterion with a reason.
struct Failed {
  std::string reason;
};

void require(bool condition, const std::string& reason) {
  if (!condition) throw Failed{reason};
}

std::string program_file(const std::string& name) {
  return testing::read_file(testing::repo_data_dir() / "programs" / name);
}

void reference_programs() {
  for (const char* name : {"bench_silver_metallic.py", "pink_shoes.py", "ladies_men.py", "carriage_right_of_horse.py"}) {
    try {
      lang::parse_source(program_file(name));
    } catch (const std::exception& e) {
      throw Failed{std::string(name) + " does not parse: " + e.what()};
    }
  }

  testing::FakePrimitives bench;
  bench.on_query = [](const lang::ImageHandle&, const std::string& q) -> std::string {
    return q == "Does the bench look metallic?" ? "no" : "yes";
  };
  auto r = testing::run_source(program_file("bench_silver_metallic.py"), bench);
  require(r.ok() && r.answer()->text == "no", "bench program should answer no when metallic is no");
  bench.on_query = [](const lang::ImageHandle&, const std::string&) { return "yes"; };
  r = testing::run_source(program_file("bench_silver_metallic.py"), bench);
  require(r.ok() && r.answer()->text == "yes", "bench program should answer yes when both are yes");

  testing::FakePrimitives shoes;
  shoes.on_query = [](const lang::ImageHandle& img, const std::string&) -> std::string {
    return img.index % 2 == 0 ? "yes" : "no";
  };
  r = testing::run_source(program_file("pink_shoes.py"), shoes, 5);
  require(r.ok() && r.answer()->text == "3", "pink shoes over 5 images should count 3");

  testing::FakePrimitives people;
  people.on_query = [](const lang::ImageHandle&, const std::string& q) -> std::string {
    return q.starts_with("How many") ? "1" : "yes";
  };
  r = testing::run_source(program_file("ladies_men.py"), people, 2);
  require(!r.ok() && r.error()->kind == lang::RuntimeErrorKind::kUnboundName,
          "ladies/men program should stop on the unbound men_exist");

  // Through the engine the same program falls back to a direct query.
  const testing::FixtureRig rig({});
  const VQAInstance* target = nullptr;
  for (const auto& inst : rig.set.instances) {
    if (inst.num_images() >= 2) {
      target = &inst;
      break;
    }
  }
  require(target != nullptr, "no multi-image fixture instance");
  backends::Script script = rig.set.script;
  script.programs[target->text] = program_file("ladies_men.py");
  backends::BackendSet set = rig.backends();
  set.code_lm = std::make_shared<backends::ScriptedLm>(script);
  const harness::AnswerOutcome out = rig.engine(set).answer_instance(*target, rig.config.rng_seed);
  require(out.record.used_fallback, "engine did not fall back on the unbound name");
  require(out.trace.runtime_error.has_value() &&
              out.trace.runtime_error->kind == lang::RuntimeErrorKind::kUnboundName,
          "trace does not record UnboundName");
  require(!out.record.predicted.empty(), "fallback produced no answer");
}

std::vector<double> brute_force_mean(const gradcam::CrossAttention& ca, const std::vector<std::size_t>& tokens) {
  std::vector<double> out(ca.attention.cols, 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double sum = 0.0;
    for (std::size_t t : tokens) sum += ca.attention.at(t, j) * std::max(0.0, ca.gradient.at(t, j));
    out[j] = sum / static_cast<double>(tokens.size());
  }
  return out;
}

void gradcam_numerics() {
  auto rng = seeded_stream(77, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t t = 1 + uniform_index(rng, 8);
    const int gh = 1 + static_cast<int>(uniform_index(rng, 24));
    const int gw = 1 + static_cast<int>(uniform_index(rng, 24));
    const std::size_t p = static_cast<std::size_t>(gh * gw);
    gradcam::CrossAttention ca;
    ca.attention = gradcam::Matrix(t, p);
    ca.gradient = gradcam::Matrix(t, p);
    for (double& v : ca.attention.data) v = unit_draw(rng);
    for (double& v : ca.gradient.data) v = unit_draw(rng) * 4.0 - 2.0;
    ca.token_texts.assign(t, "w");
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < t; ++i) {
      if (uniform_index(rng, 2) == 0 || (subset.empty() && i + 1 == t)) subset.push_back(i);
    }
    const auto got = gradcam::averaged_gradcam(ca, subset, gh, gw);
    const auto want = brute_force_mean(ca, subset);
    for (std::size_t j = 0; j < p; ++j) worst = std::max(worst, std::abs(got.values[j] - want[j]));
  }
  std::ostringstream msg;
  msg << "max abs error " << worst;
  require(worst <= 1e-12, msg.str());
}

void retrieval_top_k() {
  auto rng = seeded_stream(99, 0);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<retrieval::Example> examples;
    for (std::size_t i = 0; i < 50; ++i) {
      retrieval::Example e;
      e.id = "ex-" + std::to_string(i);
      e.question = "q";
      e.program = "answer = 1\n";
      e.embedding.resize(16);
      for (double& x : e.embedding) x = unit_draw(rng) * 2.0 - 1.0;
      examples.push_back(std::move(e));
    }
    std::vector<double> q(16);
    for (double& x : q) x = unit_draw(rng) * 2.0 - 1.0;
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      double dot = 0, na = 0, nb = 0;
      for (std::size_t j = 0; j < q.size(); ++j) {
        dot += examples[i].embedding[j] * q[j];
        na += examples[i].embedding[j] * examples[i].embedding[j];
        nb += q[j] * q[j];
      }
      scored.emplace_back(-dot / (std::sqrt(na) * std::sqrt(nb)), i);
    }
    std::sort(scored.begin(), scored.end());
    const retrieval::ExampleStore store(examples);
    for (std::size_t k : {6u, 12u}) {
      const auto got = retrieval::top_k(q, store, k, retrieval::ExampleKind::kCode);
      bool same = got.size() == k;
      for (std::size_t i = 0; same && i < k; ++i) same = got[i]->id == examples[scored[i].second].id;
      if (!same) ++mismatches;
    }
  }
  require(mismatches == 0, std::to_string(mismatches) + " mismatched rankings");
}

void oracle_end_to_end() {
  const testing::FixtureRig rig({});
  const harness::RunResult run = rig.run(rig.engine(), 4);
  require(run.report.total == rig.set.instances.size(), "not every instance was answered");
  std::ostringstream acc;
  acc << "accuracy " << run.report.accuracy();
  require(run.report.accuracy() == 1.0, acc.str());
  std::map<std::size_t, std::size_t> expected;
  for (const auto& inst : rig.set.instances) ++expected[inst.num_images()];
  const auto rows = harness::breakdown(run.report, "num_images");
  require(rows.size() == expected.size(), "wrong number of image-count groups");
  for (const auto& row : rows) {
    require(row.count == expected.at(std::stoul(row.group)), "group " + row.group + " has the wrong count");
  }
}

void fault_injection() {
  harness::FixtureOptions options;
  options.corrupt_fraction = 0.2;
  const testing::FixtureRig rig(options);
  const harness::RunResult run = rig.run(rig.engine(), 4);
  const harness::RunResult baseline = rig.run(rig.engine(harness::RunMode::kBaseline), 4);
  std::ostringstream rate;
  rate << "fallback rate " << run.report.fallback_rate();
  require(run.report.fallback_rate() == 0.2, rate.str());
  const std::set<std::string> corrupted(rig.set.corrupted.begin(), rig.set.corrupted.end());
  for (std::size_t i = 0; i < run.outcomes.size(); ++i) {
    const auto& o = *run.outcomes[i];
    require(o.record.used_fallback == (corrupted.count(o.record.instance_id) == 1),
            o.record.instance_id + " fallback does not match corruption");
    if (o.record.used_fallback) {
      require(o.record.predicted == baseline.outcomes[i]->record.predicted,
              o.record.instance_id + " fallback answer differs from baseline");
    }
  }
}

// A program that lexes and parses but always fails at runtime.
constexpr const char* kFailingProgram = "answer = undefined_name\n";

void baseline_equivalence() {
  const testing::FixtureRig rig({});
  backends::Script script = rig.set.script;
  for (auto& [question, program] : script.programs) program = kFailingProgram;
  backends::BackendSet set = rig.backends();
  set.code_lm = std::make_shared<backends::ScriptedLm>(script);
  const harness::RunResult failed = rig.run(rig.engine(set), 4);
  const harness::RunResult baseline = rig.run(rig.engine(harness::RunMode::kBaseline), 4);
  require(failed.outcomes.size() == baseline.outcomes.size(), "outcome counts differ");
  for (std::size_t i = 0; i < failed.outcomes.size(); ++i) {
    const auto& f = *failed.outcomes[i];
    const auto& b = *baseline.outcomes[i];
    require(f.record.used_fallback, f.record.instance_id + " did not fall back");
    require(f.record.predicted == b.record.predicted, f.record.instance_id + " answers differ");
    require(f.trace.captions == b.trace.captions, f.record.instance_id + " captions differ");
    require(f.trace.qa_prompts == b.trace.qa_prompts, f.record.instance_id + " QA prompts differ");
  }
}

void determinism() {
  harness::FixtureOptions fixture_options;
  fixture_options.corrupt_fraction = 0.2;
  const testing::FixtureRig rig(fixture_options);
  harness::RunOptions options;
  options.seed = rig.config.rng_seed;
  options.workers = 4;
  options.config_hash = "acceptance";
  const fs::path a = testing::scratch_dir("acceptance_det_a");
  const fs::path b = testing::scratch_dir("acceptance_det_b");
  {
    const harness::Engine engine = rig.engine();
    harness::write_outputs(a, engine, harness::run_instances(engine, rig.set.instances, options), options);
  }
  {
    const harness::Engine engine = rig.engine();
    harness::write_outputs(b, engine, harness::run_instances(engine, rig.set.instances, options), options);
  }
  std::set<std::string> names_a, names_b;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) names_a.insert(fs::relative(e.path(), a).generic_string());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) names_b.insert(fs::relative(e.path(), b).generic_string());
  }
  require(names_a == names_b, "output file sets differ");
  require(names_a.size() > rig.set.instances.size(), "missing trace files");
  for (const std::string& name : names_a) {
    // Wall-clock durations live apart from reports and traces for this reason.
    if (name == "timings.jsonl") continue;
    require(testing::read_file(a / name) == testing::read_file(b / name), name + " differs between runs");
  }
}

void scoring_table() {
  const auto& cases = testing::scoring_cases();
  require(cases.size() == 20, "expected 20 scoring cases");
  for (const auto& c : cases) {
    const double got = harness::score_answer(c.predicted, c.golds, c.mode);
    std::ostringstream msg;
    msg << c.note << ": got " << got << ", expected " << c.expected;
    require(got == c.expected, msg.str());
  }
}

std::string mutate(std::string source, std::mt19937_64& rng) {
  static const std::vector<std::string> tokens = {
      "for ", "in ", "if ", "else:", ":", "(", ")", "[", "]", ".", "\"", "'", "=", "==", "+", "-", "*", "/", "0",
      "1", "-1", "99999999999999999999", "int(", "len(", "query(img, \"x\")", "get_pos(img, \"x\")", "answer",
      "images", "\n", "\n    ", "\t", "not ", " and ", " or ", "import os", "lambda", "while ", "#", "\"\"\"", "$"};
  const std::size_t edits = 1 + uniform_index(rng, 4);
  for (std::size_t e = 0; e < edits; ++e) {
    const std::size_t at = source.empty() ? 0 : uniform_index(rng, source.size() + 1);
    switch (uniform_index(rng, 6)) {
      case 0:
        source.insert(at, tokens[uniform_index(rng, tokens.size())]);
        break;
      case 1:
        if (!source.empty()) source.erase(std::min(at, source.size() - 1), 1 + uniform_index(rng, 8));
        break;
      case 2:
        if (!source.empty()) source[std::min(at, source.size() - 1)] = static_cast<char>(32 + uniform_index(rng, 95));
        break;
      case 3: {
        const std::size_t end = source.find('\n', at);
        const std::size_t start = source.rfind('\n', at == 0 ? 0 : at - 1);
        const std::size_t from = start == std::string::npos ? 0 : start + 1;
        if (end != std::string::npos && end > from) source.insert(from, source.substr(from, end - from + 1));
        break;
      }
      case 4:
        source = source.substr(0, at);
        break;
      default:
        source.insert(at, "for i in images:\n    ");
        break;
    }
  }
  return source;
}

std::string random_soup(std::mt19937_64& rng) {
  std::string s;
  const std::size_t n = uniform_index(rng, 200);
  for (std::size_t i = 0; i < n; ++i) s += static_cast<char>(uniform_index(rng, 128));
  return s;
}

void sandbox_fuzz() {
  std::vector<std::string> corpus;
  for (const char* name : {"bench_silver_metallic.py", "pink_shoes.py", "ladies_men.py", "carriage_right_of_horse.py"}) {
    corpus.push_back(program_file(name));
  }
  const testing::FixtureRig rig({});
  for (const auto& [question, program] : rig.set.script.programs) corpus.push_back(program);

  auto rng = seeded_stream(1000, 0);
  InterpreterLimits limits;
  std::map<std::string, std::size_t> outcomes;
  for (int i = 0; i < 1000; ++i) {
    const std::string source =
        i % 10 == 9 ? random_soup(rng) : mutate(corpus[uniform_index(rng, corpus.size())], rng);
    testing::FakePrimitives prims;
    prims.on_query = [](const lang::ImageHandle& img, const std::string& q) -> std::string {
      static const char* replies[] = {"yes", "no", "2", "red", ""};
      return replies[(img.index + q.size()) % 5];
    };
    try {
      const lang::Program program = lang::parse_source(source);
      const auto images = testing::handles(1 + static_cast<std::size_t>(i % 4));
      const lang::ExecutionResult r = lang::execute(program, prims, images, limits);
      require(r.steps <= limits.max_steps, "step budget exceeded on case " + std::to_string(i));
      ++outcomes[r.ok() ? "answer" : "runtime error"];
    } catch (const lang::LexError&) {
      ++outcomes["lex error"];
    } catch (const lang::UnsupportedSyntax&) {
      ++outcomes["unsupported syntax"];
    } catch (const Failed&) {
      throw;
    } catch (const std::exception& e) {
      throw Failed{"case " + std::to_string(i) + " escaped with an untyped error: " + e.what()};
    }
  }
  require(outcomes["answer"] > 0 && outcomes["runtime error"] > 0, "fuzz corpus never reached the interpreter");
}

void prompt_goldens() {
  for (DatasetFlavor flavor : {DatasetFlavor::kSingleImage, DatasetFlavor::kMultiImage}) {
    const std::string label = flavor == DatasetFlavor::kSingleImage ? "single-image" : "multi-image";
    const prompting::RenderedPrompt r = testing::golden_code_prompt(flavor);
    require(r.text == testing::read_file(testing::golden_prompt_path(flavor)), label + " prompt differs from golden");
    const std::size_t shots = flavor == DatasetFlavor::kSingleImage ? 12 : 6;
    require(r.example_ids.size() == shots, label + " prompt has the wrong shot count");
    require(r.text.find("\nRIGHT = 24\n") != std::string::npos, label + " prompt lacks RIGHT = 24");
  }
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<void()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"reference programs parse and run", 1.0, reference_programs},
      {"gradcam matches brute force", 1.0, gradcam_numerics},
      {"top-k retrieval matches full sort", 1.0, retrieval_top_k},
      {"oracle run is exact", 10.0, oracle_end_to_end},
      {"corrupted programs fall back", 10.0, fault_injection},
      {"baseline equals fallback branch", 10.0, baseline_equivalence},
      {"outputs are deterministic", 20.0, determinism},
      {"scoring table", 1.0, scoring_table},
      {"sandbox fuzz", 30.0, sandbox_fuzz},
      {"prompt goldens", 1.0, prompt_goldens},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string reason;
    try {
      c.check();
    } catch (const Failed& f) {
      reason = f.reason;
    } catch (const std::exception& e) {
      reason = std::string("unexpected exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (reason.empty() && seconds > c.budget_seconds) {
      std::ostringstream msg;
      msg << "over the " << c.budget_seconds << "s budget";
      reason = msg.str();
    }
    std::cout << (reason.empty() ? "PASS " : "FAIL ") << c.name << " (" << std::fixed << std::setprecision(3)
              << seconds << "s)";
    if (!reason.empty()) std::cout << ": " << reason;
    std::cout << std::endl;
    if (!reason.empty()) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
