#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace codevqa {

inline constexpr std::string_view kStatementPrefix = "Is it true that ";

// "There are two dogs." -> "Is it true that there are two dogs?". Text that
// already carries the prefix is returned unchanged.
std::string statement_to_question(std::string_view text);

// "True"/"False" in any casing -> "yes"/"no"; everything else passes through.
std::string normalize_bool_answer(std::string_view gold);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
bool starts_with_ci(std::string_view text, std::string_view prefix);

// First line of an LM completion, trimmed and lowercased.
std::string first_line_answer(std::string_view completion);

// Lowercased alphanumeric words ("Is the chair red?" -> is, the, chair, red).
std::vector<std::string> words(std::string_view text);

std::vector<std::string> split_lines(std::string_view text);

// Double-quoted program-language string literal for `text`.
std::string quote_string(std::string_view text);

}  // namespace codevqa
