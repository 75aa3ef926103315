#include "codevqa/prompting/preamble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "codevqa/core/error.hpp"
#include "codevqa/core/text.hpp"
#include "codevqa/lang/value.hpp"
#include "default_preambles.hpp"

namespace codevqa::prompting {

namespace {

const std::map<std::string, std::string>& extra_docs() {
  static const std::map<std::string, std::string> docs = {
      {"find_object",
       "find_object(img: Image, object: str) -> List[Object] - returns a list of the objects in the image that match "
       "the description"},
      {"knowledge_query",
       "knowledge_query(question: str) -> str - returns the answer to a question based on world knowledge"},
  };
  return docs;
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

}  // namespace

std::set<std::string> Preamble::primitives() const {
  std::set<std::string> out;
  for (const ApiDoc& d : api_doc) {
    if (lang::visual_primitives().contains(d.name)) out.insert(d.name);
  }
  return out;
}

lang::ParseOptions Preamble::grammar() const {
  lang::ParseOptions options;
  options.allowed_primitives = primitives();
  return options;
}

std::string Preamble::render(const CoordinateFrame& frame) const {
  std::string text = template_text;
  replace_all(text, "{LEFT}", format_constant(frame.left));
  replace_all(text, "{BOTTOM}", format_constant(frame.bottom));
  replace_all(text, "{RIGHT}", format_constant(frame.right));
  replace_all(text, "{TOP}", format_constant(frame.top));
  return text;
}

Preamble make_preamble(std::string template_text, DatasetFlavor flavor,
                       const std::vector<std::string>& extra_primitives) {
  Preamble p;
  p.flavor = flavor;
  std::vector<std::string> lines = split_lines(template_text);

  std::size_t start = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]) == "API Reference:") {
      start = i;
      break;
    }
  }
  if (start == lines.size()) throw Error("preamble template has no 'API Reference:' block");
  std::size_t close = start + 1;
  while (close < lines.size() && trim(lines[close]) != "\"\"\"") ++close;
  if (close == lines.size()) throw Error("preamble API reference block is not closed");

  for (std::size_t i = start + 1; i < close; ++i) {
    const std::string line = trim(lines[i]);
    const std::size_t paren = line.find('(');
    if (paren == std::string::npos || paren == 0) continue;
    p.api_doc.push_back({line.substr(0, paren), lines[i]});
  }
  std::vector<std::string> inserted;
  for (const std::string& name : extra_primitives) {
    auto it = extra_docs().find(name);
    if (it == extra_docs().end()) throw ConfigError("extra_primitives", "unknown primitive '" + name + "'");
    const bool present = std::any_of(p.api_doc.begin(), p.api_doc.end(), [&](const ApiDoc& d) { return d.name == name; });
    if (present) continue;
    p.api_doc.push_back({name, it->second});
    inserted.push_back(it->second);
  }
  lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(close), inserted.begin(), inserted.end());

  std::string text;
  for (const std::string& l : lines) text += l + "\n";
  p.template_text = std::move(text);
  return p;
}

Preamble default_preamble(DatasetFlavor flavor, const std::vector<std::string>& extra_primitives) {
  const char* text = flavor == DatasetFlavor::kSingleImage ? generated::kSingleImagePreamble
                                                           : generated::kMultiImagePreamble;
  return make_preamble(text, flavor, extra_primitives);
}

Preamble load_preamble(const std::filesystem::path& path, DatasetFlavor flavor,
                       const std::vector<std::string>& extra_primitives) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open preamble template " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return make_preamble(buffer.str(), flavor, extra_primitives);
}

std::string format_constant(double value) {
  if (std::isfinite(value) && value == std::trunc(value) && std::fabs(value) < 1e15) {
    return std::to_string(static_cast<long long>(value));
  }
  return lang::format_float(value);
}

}  // namespace codevqa::prompting
