#include "codevqa/core/text.hpp"

#include <algorithm>
#include <cctype>

namespace codevqa {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  return to_lower(text.substr(0, prefix.size())) == to_lower(prefix);
}

std::string statement_to_question(std::string_view text) {
  if (text.starts_with(kStatementPrefix)) return std::string(text);

  std::string body(text);
  while (!body.empty() && is_space(body.back())) body.pop_back();
  if (!body.empty() && body.back() == '.') body.pop_back();
  if (!body.empty()) {
    body[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(body[0])));
  }
  if (body.empty() || body.back() != '?') body.push_back('?');
  return std::string(kStatementPrefix) + body;
}

std::string normalize_bool_answer(std::string_view gold) {
  const std::string lowered = to_lower(gold);
  if (lowered == "true") return "yes";
  if (lowered == "false") return "no";
  return std::string(gold);
}

std::string first_line_answer(std::string_view completion) {
  std::string_view rest = completion;
  // Leading blank lines are common in completions that start after "Answer:".
  while (!rest.empty()) {
    const auto newline = rest.find('\n');
    std::string_view line = rest.substr(0, newline);
    std::string trimmed = trim(line);
    if (!trimmed.empty()) return to_lower(trimmed);
    if (newline == std::string_view::npos) break;
    rest.remove_prefix(newline + 1);
  }
  return "";
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto newline = text.find('\n', start);
    if (newline == std::string_view::npos) {
      if (start < text.size()) lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, newline - start));
    start = newline + 1;
  }
  return lines;
}

std::string quote_string(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\0': out += "\\0"; break;
      default: out.push_back(c);
    }
  }
  out += '"';
  return out;
}

}  // namespace codevqa
