#include "codevqa/harness/engine.hpp"

#include <chrono>

#include "codevqa/core/random.hpp"
#include "codevqa/core/text.hpp"
#include "codevqa/lang/ast.hpp"
#include "codevqa/prompting/prompts.hpp"

namespace codevqa::harness {

std::string to_string(RunMode mode) { return mode == RunMode::kCodeVqa ? "codevqa" : "baseline-always-fallback"; }

RunMode run_mode_from_string(const std::string& text) {
  if (text == "codevqa") return RunMode::kCodeVqa;
  if (text == "baseline-always-fallback" || text == "baseline") return RunMode::kBaseline;
  throw ConfigError("mode", "unknown mode '" + text + "' (codevqa, baseline-always-fallback)");
}

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::vector<lang::ImageHandle> handles_of(const VQAInstance& instance) {
  std::vector<lang::ImageHandle> out;
  for (std::size_t i = 0; i < instance.image_refs.size(); ++i) out.push_back({i, instance.image_refs[i]});
  return out;
}

std::string error_text(const lang::RuntimeError& e) {
  return std::string(lang::to_string(e.kind)) + " at " + lang::to_string(e.location) + ": " + e.message;
}

}  // namespace

Engine::Engine(EngineConfig config, backends::BackendSet backends, std::shared_ptr<const retrieval::ExampleStore> store,
               prompting::Preamble preamble, RunMode mode)
    : config_(std::move(config)),
      backends_(std::move(backends)),
      store_(std::move(store)),
      preamble_(std::move(preamble)),
      mode_(mode) {
  config_.validate();
  if (!backends_.code_lm || !backends_.qa_lm || !backends_.vision || !backends_.embedder) {
    throw ConfigError("backend", "every backend role needs an implementation");
  }
  embeddings_ = std::make_unique<primitives::EmbeddingCache>(backends_.embedder);
}

AnswerOutcome Engine::answer_instance(const VQAInstance& instance, std::uint64_t seed) const {
  Trace trace;
  trace.instance_id = instance.id;
  trace.question = instance.text;
  trace.image_refs = instance.image_refs;
  trace.mode = to_string(mode_);
  try {
    if (mode_ == RunMode::kBaseline) {
      trace.fallback_reason = "baseline-always-fallback mode";
    } else {
      run_program(instance, seed, trace);
    }
    if (trace.fallback_reason) run_fallback(instance, seed, trace);
  } catch (const std::exception& e) {
    trace.answer.clear();
    trace.failure = std::string("unexpected error: ") + e.what();
  }
  AnswerOutcome out;
  out.record = {instance.id, trace.answer, trace.fallback_used, "traces/" + trace_file_name(instance.id)};
  out.trace = std::move(trace);
  return out;
}

void Engine::run_program(const VQAInstance& instance, std::uint64_t seed, Trace& trace) const {
  auto start = std::chrono::steady_clock::now();
  std::mt19937_64 code_rng = seeded_stream(seed, kCodeStream);
  std::string completion;
  try {
    if (!store_) throw prompting::PromptError("no example store is configured");
    const auto examples =
        primitives::select_examples(*store_, retrieval::ExampleKind::kCode,
                                    static_cast<std::size_t>(config_.num_code_shots), instance.text, config_,
                                    *embeddings_, code_rng);
    const prompting::RenderedPrompt prompt =
        prompting::build_code_prompt(preamble_, examples, instance.text, config_.frame);
    trace.code_prompt = prompt.text;
    trace.example_ids = prompt.example_ids;
    trace.prompt_token_estimate = prompt.token_estimate;
    trace.prompt_over_budget = prompt.token_estimate > config_.max_prompt_tokens;

    backends::CompleteRequest request;
    request.prompt = prompt.text;
    request.model = config_.code_model;
    request.max_tokens = config_.max_program_tokens;
    request.temperature = 0.0;
    request.stop = {"\n# Image"};
    completion = backends_.code_lm->complete(request).text;
    trace.completion = completion;
  } catch (const std::exception& e) {
    trace.times.generate_ms = ms_since(start);
    trace.fallback_reason = std::string("code generation failed: ") + e.what();
    return;
  }
  trace.times.generate_ms = ms_since(start);

  start = std::chrono::steady_clock::now();
  lang::Program program;
  try {
    trace.program = prompting::extract_program(completion);
    program = lang::parse_source(trace.program, preamble_.grammar());
    trace.parse_outcome = "ok";
  } catch (const prompting::EmptyProgram& e) {
    trace.parse_outcome = std::string("EmptyProgram: ") + e.what();
  } catch (const lang::LexError& e) {
    trace.parse_outcome = std::string("LexError: ") + e.what();
  } catch (const lang::UnsupportedSyntax& e) {
    trace.parse_outcome = std::string("UnsupportedSyntax: ") + e.what();
  }
  trace.times.parse_ms = ms_since(start);
  if (trace.parse_outcome != "ok") {
    trace.fallback_reason = trace.parse_outcome;
    return;
  }

  start = std::chrono::steady_clock::now();
  primitives::VisualPrimitives prims(config_, backends_, store_.get(), *embeddings_,
                                     seeded_stream(seed, kProgramStream));
  const std::vector<lang::ImageHandle> images = handles_of(instance);
  lang::ExecutionResult result = lang::execute(program, prims, images, config_.limits, config_.frame);
  trace.times.execute_ms = ms_since(start);
  trace.calls = std::move(result.trace);
  trace.steps = result.steps;
  trace.captions = prims.log().captions;
  trace.qa_prompts = prims.log().qa_prompts;
  if (const lang::RuntimeError* error = result.error()) {
    trace.runtime_error = *error;
    trace.fallback_reason = error_text(*error);
    return;
  }
  trace.answer = result.answer()->text;
}

void Engine::run_fallback(const VQAInstance& instance, std::uint64_t seed, Trace& trace) const {
  const auto start = std::chrono::steady_clock::now();
  trace.fallback_used = true;
  trace.answer.clear();
  primitives::VisualPrimitives prims(config_, backends_, store_.get(), *embeddings_,
                                     seeded_stream(seed, kFallbackStream));
  const std::vector<lang::ImageHandle> images = handles_of(instance);
  lang::PrimitiveCall call;
  call.name = "query";
  for (const auto& image : images) call.args.push_back(lang::describe(lang::Value(image)));
  call.args.push_back(lang::describe(lang::Value(instance.text)));
  try {
    trace.answer = prims.query_images(images, instance.text);
    call.result = lang::describe(lang::Value(trace.answer));
  } catch (const std::exception& e) {
    call.failed = true;
    call.result = e.what();
    trace.failure = std::string("fallback failed: ") + e.what();
  }
  trace.fallback_calls.push_back(std::move(call));
  for (const auto& c : prims.log().captions) trace.captions.push_back(c);
  for (const auto& p : prims.log().qa_prompts) trace.qa_prompts.push_back(p);
  trace.times.fallback_ms = ms_since(start);
}

}  // namespace codevqa::harness
