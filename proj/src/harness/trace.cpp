#include "codevqa/harness/trace.hpp"

namespace codevqa::harness {

using nlohmann::json;

json to_json(const lang::PrimitiveCall& call) {
  return {{"name", call.name}, {"args", call.args}, {"result", call.result}, {"failed", call.failed}};
}

json to_json(const lang::RuntimeError& error) {
  return {{"kind", std::string(lang::to_string(error.kind))},
          {"message", error.message},
          {"line", error.location.line},
          {"column", error.location.column}};
}

json to_json(const Trace& t) {
  json calls = json::array();
  for (const auto& c : t.calls) calls.push_back(to_json(c));
  json fallback_calls = json::array();
  for (const auto& c : t.fallback_calls) fallback_calls.push_back(to_json(c));
  json captions = json::array();
  for (const auto& c : t.captions) captions.push_back({{"image_ref", c.image_ref}, {"captions", c.captions}});
  return {
      {"instance_id", t.instance_id},
      {"question", t.question},
      {"image_refs", t.image_refs},
      {"mode", t.mode},
      {"code_prompt", t.code_prompt},
      {"example_ids", t.example_ids},
      {"prompt_token_estimate", t.prompt_token_estimate},
      {"prompt_over_budget", t.prompt_over_budget},
      {"completion", t.completion},
      {"program", t.program},
      {"parse_outcome", t.parse_outcome},
      {"calls", calls},
      {"runtime_error", t.runtime_error ? to_json(*t.runtime_error) : json(nullptr)},
      {"steps", t.steps},
      {"captions", captions},
      {"qa_prompts", t.qa_prompts},
      {"fallback_used", t.fallback_used},
      {"fallback_reason", t.fallback_reason ? json(*t.fallback_reason) : json(nullptr)},
      {"fallback_calls", fallback_calls},
      {"answer", t.answer},
      {"failure", t.failure ? json(*t.failure) : json(nullptr)},
  };
}

json timings_json(const Trace& t) {
  return {{"instance_id", t.instance_id},
          {"generate_ms", t.times.generate_ms},
          {"parse_ms", t.times.parse_ms},
          {"execute_ms", t.times.execute_ms},
          {"fallback_ms", t.times.fallback_ms}};
}

std::string trace_file_name(const std::string& instance_id) {
  std::string out;
  for (char c : instance_id) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                      c == '_' || c == '.';
    out.push_back(safe ? c : '_');
  }
  if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
  return out + ".json";
}

}  // namespace codevqa::harness
