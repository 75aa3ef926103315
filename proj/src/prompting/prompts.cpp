#include "codevqa/prompting/prompts.hpp"

#include "codevqa/core/text.hpp"

namespace codevqa::prompting {

int estimate_tokens(std::string_view text) { return static_cast<int>((text.size() + 3) / 4); }

std::string example_header(DatasetFlavor flavor, std::size_t number, std::string_view question) {
  const char* label = flavor == DatasetFlavor::kSingleImage ? "# Image " : "# Image Set ";
  return label + std::to_string(number) + ": " + std::string(question);
}

namespace {

std::string with_newline(std::string text) {
  if (text.empty() || text.back() != '\n') text.push_back('\n');
  return text;
}

void append_captions(std::string& out, const std::vector<std::vector<std::string>>& per_image) {
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    out += per_image.size() == 1 ? std::string("Image captions:\n") : "Image " + std::to_string(i + 1) + " captions:\n";
    for (const std::string& c : per_image[i]) out += c + "\n";
  }
}

}  // namespace

RenderedPrompt build_code_prompt(const Preamble& preamble, std::span<const retrieval::Example* const> examples,
                                 const std::string& question, const CoordinateFrame& frame) {
  if (trim(question).empty()) throw PromptError("cannot render a code prompt for an empty question");
  if (examples.empty()) throw PromptError("code prompt needs at least one in-context example");
  RenderedPrompt out;
  out.text = with_newline(preamble.render(frame));
  std::size_t number = 1;
  for (const retrieval::Example* e : examples) {
    if (e->kind != retrieval::ExampleKind::kCode) throw PromptError("example '" + e->id + "' is not a code example");
    out.text += example_header(preamble.flavor, number++, e->question) + "\n";
    out.text += with_newline(e->program);
    out.example_ids.push_back(e->id);
  }
  out.text += example_header(preamble.flavor, number, question) + "\n";
  out.token_estimate = estimate_tokens(out.text);
  return out;
}

RenderedPrompt build_qa_prompt(const std::string& question, std::span<const CaptionSet> captions,
                               std::span<const retrieval::Example* const> qa_examples) {
  if (captions.empty()) throw PromptError("QA prompt needs captions for at least one image");
  if (trim(question).empty()) throw PromptError("cannot render a QA prompt for an empty question");
  RenderedPrompt out;
  for (const retrieval::Example* e : qa_examples) {
    if (e->kind != retrieval::ExampleKind::kQa) throw PromptError("example '" + e->id + "' is not a QA example");
    append_captions(out.text, e->captions);
    out.text += "Question: " + e->question + "\nAnswer: " + e->answer + "\n\n";
    out.example_ids.push_back(e->id);
  }
  std::vector<std::vector<std::string>> test;
  for (const CaptionSet& c : captions) test.push_back(c.captions);
  append_captions(out.text, test);
  out.text += "Question: " + question + "\nAnswer:";
  out.token_estimate = estimate_tokens(out.text);
  return out;
}

std::string build_knowledge_prompt(const std::string& question) { return "Question: " + question + "\nAnswer:"; }

std::string extract_program(std::string_view completion) {
  std::vector<std::string> lines = split_lines(completion);
  // Leading blank lines carry no program.
  while (!lines.empty() && trim(lines.front()).empty()) lines.erase(lines.begin());
  if (!lines.empty() && trim(lines.front()).starts_with("```")) {
    lines.erase(lines.begin());
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (trim(lines[i]).starts_with("```")) {
        lines.resize(i);
        break;
      }
    }
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].starts_with("# Image")) {
      lines.resize(i);
      break;
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw EmptyProgram("completion contains no program");
  std::string out;
  for (const std::string& l : lines) out += l + "\n";
  return out;
}

}  // namespace codevqa::prompting
