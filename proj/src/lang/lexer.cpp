#include <array>
#include <charconv>
#include <cctype>

#include "codevqa/lang/token.hpp"

namespace codevqa::lang {

std::string to_string(const SourceLocation& location) {
  return "line " + std::to_string(location.line) + ", column " + std::to_string(location.column);
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::kName: return "NAME";
    case TokenKind::kInt: return "INT";
    case TokenKind::kFloat: return "FLOAT";
    case TokenKind::kString: return "STRING";
    case TokenKind::kOp: return "OP";
    case TokenKind::kNewline: return "NEWLINE";
    case TokenKind::kIndent: return "INDENT";
    case TokenKind::kDedent: return "DEDENT";
    case TokenKind::kKeyword: return "KEYWORD";
    case TokenKind::kEof: return "EOF";
  }
  return "?";
}

namespace {

// Every Python keyword lexes as KEYWORD so the parser can name forbidden
// constructs precisely.
constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

// Longest spellings first.
constexpr std::array<std::string_view, 45> kOperators = {
    "**=", "//=", ">>=", "<<=", "**", "//", "==", "!=", "<=", ">=", "+=", "-=",
    "*=",  "/=",  "%=",  "&=",  "|=", "^=", "->", ":=", "<<", ">>", "+",  "-",
    "*",   "/",   "%",   "=",   "<",  ">",  "(",  ")",  "[",  "]",  "{",  "}",
    ",",   ":",   ".",   ";",   "@",  "&",  "|",  "^",  "~"};

constexpr int kMaxIndentDepth = 100;
constexpr int kMaxBracketDepth = 200;

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
 public:
  explicit Lexer(std::string_view source) : src_(source) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    while (pos_ < src_.size()) {
      if (at_line_start_ && brackets_.empty()) {
        if (!handle_indentation()) continue;
      }
      lex_token();
    }
    if (!brackets_.empty()) {
      throw LexError(bracket_locations_.back(), std::string("unclosed '") + brackets_.back() + "'");
    }
    if (line_has_tokens_) emit(TokenKind::kNewline, "", line_, column());
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::kDedent, "", line_, 1);
    }
    emit(TokenKind::kEof, "", line_, column());
    return std::move(tokens_);
  }

 private:
  int column() const { return static_cast<int>(pos_ - line_start_) + 1; }

  void emit(TokenKind kind, std::string text, int line, int col) {
    tokens_.push_back(Token{kind, std::move(text), line, col});
  }

  void new_line() {
    ++line_;
    line_start_ = pos_;
  }

  // Returns false when the physical line was blank or comment-only and has
  // been consumed.
  bool handle_indentation() {
    int width = 0;
    std::size_t scan = pos_;
    while (scan < src_.size() && (src_[scan] == ' ' || src_[scan] == '\t' || src_[scan] == '\f')) {
      if (src_[scan] == '\t') {
        width = (width / 8 + 1) * 8;
      } else if (src_[scan] == ' ') {
        ++width;
      }
      ++scan;
    }
    if (scan >= src_.size() || src_[scan] == '\n' || src_[scan] == '#' ||
        (src_[scan] == '\r' && scan + 1 < src_.size() && src_[scan + 1] == '\n')) {
      while (scan < src_.size() && src_[scan] != '\n') ++scan;
      pos_ = scan;
      if (pos_ < src_.size()) {
        ++pos_;
        new_line();
      }
      return false;
    }
    pos_ = scan;
    at_line_start_ = false;
    if (width > indents_.back()) {
      if (static_cast<int>(indents_.size()) > kMaxIndentDepth) {
        throw LexError({line_, column()}, "indentation nested too deeply");
      }
      indents_.push_back(width);
      emit(TokenKind::kIndent, "", line_, 1);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(TokenKind::kDedent, "", line_, 1);
      }
      if (width != indents_.back()) {
        throw LexError({line_, column()}, "inconsistent dedent");
      }
    }
    return true;
  }

  void end_logical_line() {
    if (brackets_.empty()) {
      if (line_has_tokens_) emit(TokenKind::kNewline, "", line_, column());
      line_has_tokens_ = false;
      at_line_start_ = true;
    }
  }

  void lex_token() {
    const char c = src_[pos_];
    if (c == '\n') {
      end_logical_line();
      ++pos_;
      new_line();
      return;
    }
    if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
      ++pos_;
      return;
    }
    if (c == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      return;
    }
    if (c == '\\') {
      std::size_t next = pos_ + 1;
      if (next < src_.size() && src_[next] == '\r') ++next;
      if (next < src_.size() && src_[next] == '\n') {
        pos_ = next + 1;
        new_line();
        return;
      }
      throw LexError({line_, column()}, "unexpected character after line continuation");
    }
    line_has_tokens_ = true;
    if (is_name_start(c)) return lex_name();
    if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      return lex_number();
    }
    if (c == '"' || c == '\'') return lex_string();
    lex_operator();
  }

  void lex_name() {
    const int col = column();
    const std::size_t start = pos_;
    while (pos_ < src_.size() && is_name_char(src_[pos_])) ++pos_;
    std::string text(src_.substr(start, pos_ - start));
    // Decide the kind first: argument evaluation order would let the move win.
    const TokenKind kind = is_keyword(text) ? TokenKind::kKeyword : TokenKind::kName;
    emit(kind, std::move(text), line_, col);
  }

  void lex_number() {
    const int col = column();
    const std::size_t start = pos_;
    bool is_float = false;
    while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      is_float = true;
      ++pos_;
      while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t scan = pos_ + 1;
      if (scan < src_.size() && (src_[scan] == '+' || src_[scan] == '-')) ++scan;
      if (scan < src_.size() && is_digit(src_[scan])) {
        is_float = true;
        pos_ = scan;
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
      }
    }
    if (pos_ < src_.size() && is_name_char(src_[pos_])) {
      throw LexError({line_, column()}, "invalid numeric literal");
    }
    std::string text(src_.substr(start, pos_ - start));
    if (is_float) {
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw LexError({line_, col}, "float literal out of range");
      }
      emit(TokenKind::kFloat, std::move(text), line_, col);
    } else {
      long long value = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw LexError({line_, col}, "integer literal out of range");
      }
      emit(TokenKind::kInt, std::move(text), line_, col);
    }
  }

  void lex_string() {
    const int col = column();
    const int start_line = line_;
    const char quote = src_[pos_];
    const bool triple = src_.substr(pos_, 3) == std::string(3, quote);
    pos_ += triple ? 3 : 1;
    std::string value;
    while (true) {
      if (pos_ >= src_.size()) throw LexError({start_line, col}, "unterminated string literal");
      const char c = src_[pos_];
      if (triple) {
        if (src_.substr(pos_, 3) == std::string(3, quote)) {
          pos_ += 3;
          break;
        }
      } else if (c == quote) {
        ++pos_;
        break;
      }
      if (c == '\n') {
        if (!triple) throw LexError({start_line, col}, "unterminated string literal");
        value.push_back('\n');
        ++pos_;
        new_line();
        continue;
      }
      if (c == '\\') {
        if (pos_ + 1 >= src_.size()) throw LexError({start_line, col}, "unterminated string literal");
        const char escaped = src_[pos_ + 1];
        pos_ += 2;
        switch (escaped) {
          case 'n': value.push_back('\n'); break;
          case 't': value.push_back('\t'); break;
          case 'r': value.push_back('\r'); break;
          case '0': value.push_back('\0'); break;
          case '\\': value.push_back('\\'); break;
          case '\'': value.push_back('\''); break;
          case '"': value.push_back('"'); break;
          case '\n':
            new_line();
            break;
          default:
            value.push_back('\\');
            value.push_back(escaped);
        }
        continue;
      }
      value.push_back(c);
      ++pos_;
    }
    emit(TokenKind::kString, std::move(value), start_line, col);
  }

  void lex_operator() {
    const int col = column();
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, op.size()) != op) continue;
      pos_ += op.size();
      if (op == "(" || op == "[" || op == "{") {
        if (static_cast<int>(brackets_.size()) >= kMaxBracketDepth) {
          throw LexError({line_, col}, "brackets nested too deeply");
        }
        brackets_.push_back(op[0]);
        bracket_locations_.push_back({line_, col});
      } else if (op == ")" || op == "]" || op == "}") {
        const char open = op == ")" ? '(' : op == "]" ? '[' : '{';
        if (brackets_.empty() || brackets_.back() != open) {
          throw LexError({line_, col}, std::string("unmatched '") + std::string(op) + "'");
        }
        brackets_.pop_back();
        bracket_locations_.pop_back();
      }
      emit(TokenKind::kOp, std::string(op), line_, col);
      return;
    }
    const unsigned char c = static_cast<unsigned char>(src_[pos_]);
    std::string shown = (c >= 0x20 && c < 0x7f) ? std::string(1, static_cast<char>(c))
                                                : "\\x" + std::to_string(static_cast<int>(c));
    throw LexError({line_, col}, "illegal character '" + shown + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  int line_ = 1;
  bool at_line_start_ = true;
  bool line_has_tokens_ = false;
  std::vector<int> indents_;
  std::vector<char> brackets_;
  std::vector<SourceLocation> bracket_locations_;
  std::vector<Token> tokens_;
};

}  // namespace

bool is_keyword(std::string_view word) {
  for (auto kw : kKeywords) {
    if (kw == word) return true;
  }
  return false;
}

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace codevqa::lang
