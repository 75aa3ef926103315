#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "codevqa/core/types.hpp"
#include "codevqa/lang/ast.hpp"

namespace codevqa::prompting {

struct ApiDoc {
  std::string name;
  // The line exactly as it appears under "API Reference:".
  std::string line;
  bool operator==(const ApiDoc&) const = default;
};

// Code-prompt preamble: instruction, {LEFT}/{BOTTOM}/{RIGHT}/{TOP} constants,
// imports and the API reference docstring.
struct Preamble {
  DatasetFlavor flavor = DatasetFlavor::kSingleImage;
  std::string template_text;
  std::vector<ApiDoc> api_doc;

  // Visual primitives the API reference documents; the parser accepts
  // exactly these plus the builtins.
  std::set<std::string> primitives() const;
  lang::ParseOptions grammar() const;

  // Template with the frame's constants substituted.
  std::string render(const CoordinateFrame& frame) const;
};

// Parses the API reference out of a template and appends one documented line
// per extra primitive (find_object, knowledge_query) before its closing quotes.
Preamble make_preamble(std::string template_text, DatasetFlavor flavor,
                       const std::vector<std::string>& extra_primitives = {});

// The shipped single-image (GQA) and multi-image (COVR, NLVR2) templates.
Preamble default_preamble(DatasetFlavor flavor, const std::vector<std::string>& extra_primitives = {});

Preamble load_preamble(const std::filesystem::path& path, DatasetFlavor flavor,
                       const std::vector<std::string>& extra_primitives = {});

// "24" for integral values, shortest round-trip decimal otherwise.
std::string format_constant(double value);

}  // namespace codevqa::prompting
