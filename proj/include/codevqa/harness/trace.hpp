#pragma once

#include <optional>
#include <string>
#include <vector>

#include "codevqa/core/types.hpp"
#include "codevqa/lang/interpreter.hpp"
#include "json.hpp"

namespace codevqa::harness {

struct StageTimes {
  double generate_ms = 0.0;
  double parse_ms = 0.0;
  double execute_ms = 0.0;
  double fallback_ms = 0.0;
};

// Everything needed to audit one answer after the fact.
struct Trace {
  std::string instance_id;
  std::string question;
  std::vector<std::string> image_refs;
  std::string mode;

  std::string code_prompt;
  std::vector<std::string> example_ids;
  int prompt_token_estimate = 0;
  bool prompt_over_budget = false;
  std::string completion;
  std::string program;
  // "ok", "skipped", or "<ErrorKind>: <message>".
  std::string parse_outcome = "skipped";

  std::vector<lang::PrimitiveCall> calls;
  std::optional<lang::RuntimeError> runtime_error;
  std::int64_t steps = 0;

  std::vector<CaptionSet> captions;
  std::vector<std::string> qa_prompts;

  bool fallback_used = false;
  std::optional<std::string> fallback_reason;
  std::vector<lang::PrimitiveCall> fallback_calls;

  std::string answer;
  // Set only when even the fallback failed and the answer is "".
  std::optional<std::string> failure;

  // Kept out of to_json so trace files stay byte-identical across runs.
  StageTimes times;
};

nlohmann::json to_json(const Trace& trace);
nlohmann::json timings_json(const Trace& trace);

nlohmann::json to_json(const lang::PrimitiveCall& call);
nlohmann::json to_json(const lang::RuntimeError& error);

// Instance id made safe for a file name ("a/b c" -> "a_b_c"). Ids that differ
// only in replaced characters map to the same file.
std::string trace_file_name(const std::string& instance_id);

}  // namespace codevqa::harness
