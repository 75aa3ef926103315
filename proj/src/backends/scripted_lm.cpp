#include "codevqa/backends/scripted_lm.hpp"

#include <fstream>

#include "codevqa/backends/hashing_embedder.hpp"
#include "codevqa/core/text.hpp"
#include "json.hpp"

namespace codevqa::backends {

using nlohmann::json;

Script load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open script file " + path.string());
  try {
    const json doc = json::parse(in);
    Script s;
    s.programs = doc.value("programs", std::map<std::string, std::string>{});
    s.answers = doc.value("answers", std::map<std::string, std::string>{});
    s.default_program = doc.value("default_program", true);
    return s;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_script(const std::filesystem::path& path, const Script& script) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write script file " + path.string());
  const json doc = {{"programs", script.programs},
                    {"answers", script.answers},
                    {"default_program", script.default_program}};
  out << doc.dump(1) << "\n";
}

std::string code_prompt_question(const std::string& prompt) {
  std::string found;
  for (const std::string& line : split_lines(prompt)) {
    if (!line.starts_with("# Image")) continue;
    const std::size_t colon = line.find(": ");
    if (colon != std::string::npos) found = line.substr(colon + 2);
  }
  return trim(found);
}

std::string qa_prompt_question(const std::string& prompt) {
  std::string found;
  for (const std::string& line : split_lines(prompt)) {
    if (line.starts_with("Question: ")) found = line.substr(10);
  }
  return trim(found);
}

std::string default_query_program(const std::string& question) {
  return "img = open_image(\"Image1.jpg\")\nanswer = query(img, " + quote_string(question) + ")\n";
}

CompleteResponse ScriptedLm::complete(const CompleteRequest& request) {
  const std::string code_q = code_prompt_question(request.prompt);
  if (!code_q.empty()) {
    if (auto it = script_.programs.find(code_q); it != script_.programs.end()) return {it->second};
    if (script_.default_program) return {default_query_program(code_q)};
    throw BackendError(BackendErrorKind::kRemote, "no scripted program for '" + code_q + "'");
  }
  const std::string qa_q = qa_prompt_question(request.prompt);
  if (auto it = script_.answers.find(qa_q); it != script_.answers.end()) return {it->second};
  throw BackendError(BackendErrorKind::kRemote, "no scripted completion for this prompt");
}

AttentionResponse ScriptedLm::attention(const AttentionRequest&) { not_served("attention"); }
CaptionResponse ScriptedLm::caption(const CaptionRequest&) { not_served("caption"); }
ItcResponse ScriptedLm::itc(const ItcRequest&) { not_served("itc"); }
DetectResponse ScriptedLm::detect(const DetectRequest&) { not_served("detect"); }
EmbedResponse ScriptedLm::embed(const EmbedRequest&) { not_served("embed"); }
Description ScriptedLm::describe() { return Description{1, 1, 0, "none"}; }

}  // namespace codevqa::backends
