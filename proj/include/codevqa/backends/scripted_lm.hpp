#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "codevqa/backends/backend.hpp"

namespace codevqa::backends {

struct Script {
  // Code-prompt question (text after "# Image N: ") -> program source.
  std::map<std::string, std::string> programs;
  // QA-prompt question (last "Question: " line) -> answer.
  std::map<std::string, std::string> answers;
  // Unmapped code prompts get `answer = query(img, "<question>")`.
  bool default_program = true;
  bool operator==(const Script&) const = default;
};

Script load_script(const std::filesystem::path& path);
void save_script(const std::filesystem::path& path, const Script& script);

// The test question of a code prompt: the text after the last "# Image N: "
// or "# Image Set N: " header. Empty when there is none.
std::string code_prompt_question(const std::string& prompt);

// Last "Question: " line of a QA prompt, or empty.
std::string qa_prompt_question(const std::string& prompt);

// The program the default rule produces for a question.
std::string default_query_program(const std::string& question);

// Deterministic LM: looks the prompt's question up in a script table. Serves
// only `complete`.
class ScriptedLm : public Backend {
 public:
  explicit ScriptedLm(Script script) : script_(std::move(script)) {}

  CompleteResponse complete(const CompleteRequest& request) override;
  AttentionResponse attention(const AttentionRequest&) override;
  CaptionResponse caption(const CaptionRequest&) override;
  ItcResponse itc(const ItcRequest&) override;
  DetectResponse detect(const DetectRequest&) override;
  EmbedResponse embed(const EmbedRequest&) override;
  Description describe() override;

  const Script& script() const { return script_; }

 private:
  Script script_;
};

}  // namespace codevqa::backends
