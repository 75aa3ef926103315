#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "codevqa/lang/token.hpp"

namespace codevqa::lang {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using Block = std::vector<Stmt>;

struct NoneLiteral {
  bool operator==(const NoneLiteral&) const = default;
};
using LiteralValue = std::variant<NoneLiteral, std::string, std::int64_t, double, bool>;

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kMod };
enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };
enum class BoolOpKind { kAnd, kOr };

struct Literal {
  LiteralValue value;
};
struct Name {
  std::string id;
};
struct Call {
  std::string callee;
  std::vector<ExprPtr> args;
};
struct BinOp {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct Compare {
  CompareOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct BoolOp {
  BoolOpKind op;
  std::vector<ExprPtr> operands;
};
struct UnaryNot {
  ExprPtr operand;
};
struct TupleExpr {
  std::vector<ExprPtr> items;
};

struct Expr {
  std::variant<Literal, Name, Call, BinOp, Compare, BoolOp, UnaryNot, TupleExpr> node;
  SourceLocation location;
};

// targets has one entry for `x = ...` and several for `x, y = ...`.
struct Assign {
  std::vector<std::string> targets;
  bool tuple_target = false;
  ExprPtr value;
};
struct AugAssign {
  std::string target;
  BinaryOp op;  // kAdd or kSub
  ExprPtr value;
};
struct For {
  std::string loop_var;
  ExprPtr iterable;
  Block body;
};
struct IfBranch {
  ExprPtr condition;
  Block body;
};
struct If {
  std::vector<IfBranch> branches;  // if, then each elif
  Block else_body;                 // empty when there is no else
};
struct ExprStmt {
  ExprPtr expr;
};

struct Stmt {
  std::variant<Assign, AugAssign, For, If, ExprStmt> node;
  SourceLocation location;
};

struct Program {
  Block body;
};

std::string_view to_string(BinaryOp op);
std::string_view to_string(CompareOp op);
std::string_view to_string(BoolOpKind op);

// Everything outside the accepted grammar: definitions, imports, while loops,
// indexing, attribute access, calls to unknown functions, ...
class UnsupportedSyntax : public Error {
 public:
  UnsupportedSyntax(SourceLocation location, std::string construct, const std::string& message)
      : Error(to_string(location) + ": unsupported syntax '" + construct + "': " + message),
        location_(location),
        construct_(std::move(construct)) {}

  SourceLocation location() const { return location_; }
  const std::string& construct() const { return construct_; }

 private:
  SourceLocation location_;
  std::string construct_;
};

// Primitives callable from generated programs.
inline const std::set<std::string>& visual_primitives() {
  static const std::set<std::string> names = {"query", "get_pos", "find_matching_image", "find_object",
                                              "knowledge_query"};
  return names;
}

// Callables every program may use regardless of flavor.
inline const std::set<std::string>& builtin_functions() {
  static const std::set<std::string> names = {"open_image", "open_images", "int", "float",
                                              "str",        "len",         "abs", "min",
                                              "max"};
  return names;
}

struct ParseOptions {
  // Visual primitives the program may call; defaults to all five.
  std::set<std::string> allowed_primitives = visual_primitives();
  int max_nesting = 100;
};

Program parse(const std::vector<Token>& tokens, const ParseOptions& options = {});
// tokenize + parse.
Program parse_source(std::string_view source, const ParseOptions& options = {});

}  // namespace codevqa::lang
