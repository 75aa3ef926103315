#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codevqa/core/error.hpp"
#include "codevqa/core/types.hpp"
#include "codevqa/prompting/preamble.hpp"
#include "codevqa/retrieval/example_store.hpp"

namespace codevqa::prompting {

class PromptError : public Error {
 public:
  using Error::Error;
};

class EmptyProgram : public Error {
 public:
  using Error::Error;
};

struct RenderedPrompt {
  std::string text;
  std::vector<std::string> example_ids;
  int token_estimate = 0;
  bool operator==(const RenderedPrompt&) const = default;
};

// Four characters per token; only used for budget diagnostics.
int estimate_tokens(std::string_view text);

// "# Image 3: <q>" for single-image flavors, "# Image Set 3: <q>" otherwise.
std::string example_header(DatasetFlavor flavor, std::size_t number, std::string_view question);

// Preamble, then one header + program per example in the order given, then
// the test question's header with no program. Throws PromptError on an empty
// question or an empty example list.
RenderedPrompt build_code_prompt(const Preamble& preamble, std::span<const retrieval::Example* const> examples,
                                 const std::string& question, const CoordinateFrame& frame);

// Blocks of "Image captions:" (or "Image i captions:" per image when an
// instance has several) + "Question:" + "Answer:", separated by blank lines.
// The last block is the test question and ends with the bare "Answer:" cue.
RenderedPrompt build_qa_prompt(const std::string& question, std::span<const CaptionSet> captions,
                               std::span<const retrieval::Example* const> qa_examples);

// Prompt for knowledge_query: no captions, no examples.
std::string build_knowledge_prompt(const std::string& question);

// Strips surrounding code fences and cuts at the first "# Image" line after
// the first line. Throws EmptyProgram when nothing but whitespace remains.
std::string extract_program(std::string_view completion);

}  // namespace codevqa::prompting
