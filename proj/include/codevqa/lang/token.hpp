#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "codevqa/core/error.hpp"

namespace codevqa::lang {

struct SourceLocation {
  int line = 1;
  int column = 1;
  bool operator==(const SourceLocation&) const = default;
};

std::string to_string(const SourceLocation& location);

enum class TokenKind { kName, kInt, kFloat, kString, kOp, kNewline, kIndent, kDedent, kKeyword, kEof };

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::kEof;
  // Identifier, operator spelling, keyword, number spelling, or the decoded
  // string literal contents.
  std::string text;
  int line = 1;
  int column = 1;

  SourceLocation location() const { return {line, column}; }
  bool is_op(std::string_view op) const { return kind == TokenKind::kOp && text == op; }
  bool is_keyword(std::string_view kw) const { return kind == TokenKind::kKeyword && text == kw; }
  bool operator==(const Token&) const = default;
};

// Raised for unterminated strings, inconsistent dedents, and characters that
// cannot start any token.
class LexError : public Error {
 public:
  LexError(SourceLocation location, const std::string& message)
      : Error("line " + std::to_string(location.line) + ", column " +
              std::to_string(location.column) + ": " + message),
        location_(location) {}

  SourceLocation location() const { return location_; }

 private:
  SourceLocation location_;
};

// Indentation-sensitive tokenizer for the generated-program language. Tabs
// advance to the next multiple of 8 columns, as in Python.
std::vector<Token> tokenize(std::string_view source);

bool is_keyword(std::string_view word);

}  // namespace codevqa::lang
