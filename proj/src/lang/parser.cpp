#include "codevqa/lang/ast.hpp"

namespace codevqa::lang {

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::kAdd: return "+";
    case BinaryOp::kSub: return "-";
    case BinaryOp::kMul: return "*";
    case BinaryOp::kDiv: return "/";
    case BinaryOp::kMod: return "%";
  }
  return "?";
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "==";
    case CompareOp::kNe: return "!=";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
  }
  return "?";
}

std::string_view to_string(BoolOpKind op) { return op == BoolOpKind::kAnd ? "and" : "or"; }

namespace {

std::string describe(const Token& token) {
  switch (token.kind) {
    case TokenKind::kNewline: return "end of line";
    case TokenKind::kIndent: return "indent";
    case TokenKind::kDedent: return "dedent";
    case TokenKind::kEof: return "end of input";
    case TokenKind::kString: return "string literal";
    default: return token.text;
  }
}

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, const ParseOptions& options)
      : tokens_(tokens), options_(options) {
    if (tokens_.empty() || tokens_.back().kind != TokenKind::kEof) {
      throw UnsupportedSyntax({1, 1}, "token stream", "token stream must end with EOF");
    }
  }

  Program parse_program() {
    Program program;
    while (!at(TokenKind::kEof)) {
      if (at(TokenKind::kNewline)) {
        advance();
        continue;
      }
      program.body.push_back(parse_statement());
    }
    return program;
  }

 private:
  class DepthGuard {
   public:
    DepthGuard(Parser& parser, SourceLocation location) : parser_(parser) {
      if (++parser_.depth_ > parser_.options_.max_nesting) {
        throw UnsupportedSyntax(location, "nesting", "program is nested too deeply");
      }
    }
    ~DepthGuard() { --parser_.depth_; }
    DepthGuard(const DepthGuard&) = delete;
    DepthGuard& operator=(const DepthGuard&) = delete;

   private:
    Parser& parser_;
  };

  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t index = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[index];
  }
  bool at(TokenKind kind) const { return peek().kind == kind; }
  bool at_op(std::string_view op) const { return peek().is_op(op); }
  bool at_keyword(std::string_view kw) const { return peek().is_keyword(kw); }
  const Token& advance() {
    const Token& token = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return token;
  }

  [[noreturn]] void unexpected(const Token& token, const std::string& expected) const {
    throw UnsupportedSyntax(token.location(), describe(token),
                            "expected " + expected + ", found " + describe(token));
  }

  const Token& expect_op(std::string_view op) {
    if (!at_op(op)) unexpected(peek(), "'" + std::string(op) + "'");
    return advance();
  }

  void expect_newline() {
    if (at(TokenKind::kNewline)) {
      advance();
      return;
    }
    if (at(TokenKind::kEof)) return;
    const Token& token = peek();
    if (token.is_op(";")) throw UnsupportedSyntax(token.location(), ";", "multiple statements per line");
    unexpected(token, "end of line");
  }

  Stmt parse_statement() {
    const Token& token = peek();
    DepthGuard guard(*this, token.location());
    if (token.kind == TokenKind::kIndent) {
      throw UnsupportedSyntax(token.location(), "indent", "unexpected indent");
    }
    if (token.kind == TokenKind::kKeyword) {
      if (token.text == "for") return parse_for();
      if (token.text == "if") return parse_if();
      if (token.text != "not" && token.text != "True" && token.text != "False" &&
          token.text != "None") {
        if (token.text == "elif" || token.text == "else") {
          throw UnsupportedSyntax(token.location(), token.text, "'" + token.text + "' without 'if'");
        }
        throw UnsupportedSyntax(token.location(), token.text,
                                "'" + token.text + "' statements are not supported");
      }
    }
    Stmt stmt = parse_simple_statement();
    expect_newline();
    return stmt;
  }

  Stmt parse_simple_statement() {
    const SourceLocation location = peek().location();
    ExprPtr first = parse_expr_list();
    if (at_op("=")) {
      advance();
      Assign assign;
      if (auto* name = std::get_if<Name>(&first->node)) {
        assign.targets.push_back(name->id);
      } else if (auto* tuple = std::get_if<TupleExpr>(&first->node)) {
        assign.tuple_target = true;
        for (const auto& item : tuple->items) {
          auto* item_name = std::get_if<Name>(&item->node);
          if (item_name == nullptr) {
            throw UnsupportedSyntax(item->location, "assignment target",
                                    "tuple targets may only contain names");
          }
          assign.targets.push_back(item_name->id);
        }
      } else {
        throw UnsupportedSyntax(first->location, "assignment target",
                                "only names and tuples of names can be assigned");
      }
      assign.value = parse_expr_list();
      if (at_op("=")) throw UnsupportedSyntax(peek().location(), "=", "chained assignment");
      return Stmt{std::move(assign), location};
    }
    if (at_op("+=") || at_op("-=")) {
      const BinaryOp op = peek().text == "+=" ? BinaryOp::kAdd : BinaryOp::kSub;
      advance();
      auto* name = std::get_if<Name>(&first->node);
      if (name == nullptr) {
        throw UnsupportedSyntax(first->location, "assignment target",
                                "augmented assignment needs a single name");
      }
      AugAssign aug{name->id, op, parse_expression()};
      return Stmt{std::move(aug), location};
    }
    const Token& token = peek();
    if (token.kind == TokenKind::kOp && token.text.size() >= 2 && token.text.back() == '=' &&
        token.text != "==" && token.text != "!=" && token.text != "<=" && token.text != ">=") {
      throw UnsupportedSyntax(token.location(), token.text, "augmented operator not supported");
    }
    if (token.is_op(":")) throw UnsupportedSyntax(token.location(), ":", "annotations are not supported");
    return Stmt{ExprStmt{std::move(first)}, location};
  }

  Block parse_suite() {
    expect_op(":");
    Block body;
    if (!at(TokenKind::kNewline)) {
      // Single-line suite: `if x: answer = "yes"`.
      body.push_back(parse_simple_statement());
      expect_newline();
      return body;
    }
    advance();
    if (!at(TokenKind::kIndent)) unexpected(peek(), "an indented block");
    advance();
    while (!at(TokenKind::kDedent) && !at(TokenKind::kEof)) {
      if (at(TokenKind::kNewline)) {
        advance();
        continue;
      }
      body.push_back(parse_statement());
    }
    if (at(TokenKind::kDedent)) advance();
    if (body.empty()) unexpected(peek(), "a statement");
    return body;
  }

  Stmt parse_for() {
    const SourceLocation location = advance().location();
    const Token& var = peek();
    if (var.kind != TokenKind::kName) {
      if (var.is_op("(") || peek(1).is_op(",")) {
        throw UnsupportedSyntax(var.location(), "for", "loop targets must be a single name");
      }
      unexpected(var, "a loop variable name");
    }
    std::string loop_var = advance().text;
    if (at_op(",")) throw UnsupportedSyntax(peek().location(), "for", "loop targets must be a single name");
    if (!at_keyword("in")) unexpected(peek(), "'in'");
    advance();
    ExprPtr iterable = parse_expression();
    Block body = parse_suite();
    if (at_keyword("else")) throw UnsupportedSyntax(peek().location(), "for-else", "for-else is not supported");
    return Stmt{For{std::move(loop_var), std::move(iterable), std::move(body)}, location};
  }

  Stmt parse_if() {
    const SourceLocation location = advance().location();
    If stmt;
    ExprPtr condition = parse_expression();
    stmt.branches.push_back(IfBranch{std::move(condition), parse_suite()});
    while (at_keyword("elif")) {
      advance();
      ExprPtr elif_condition = parse_expression();
      stmt.branches.push_back(IfBranch{std::move(elif_condition), parse_suite()});
    }
    if (at_keyword("else")) {
      advance();
      stmt.else_body = parse_suite();
    }
    return Stmt{std::move(stmt), location};
  }

  ExprPtr make(SourceLocation location, auto node) {
    return std::make_unique<Expr>(Expr{std::move(node), location});
  }

  ExprPtr parse_expr_list() {
    const SourceLocation location = peek().location();
    ExprPtr first = parse_expression();
    if (!at_op(",")) return first;
    TupleExpr tuple;
    tuple.items.push_back(std::move(first));
    while (at_op(",")) {
      advance();
      if (at(TokenKind::kNewline) || at(TokenKind::kEof) || at_op("=") || at_op(")")) break;
      tuple.items.push_back(parse_expression());
    }
    return make(location, std::move(tuple));
  }

  ExprPtr parse_expression() {
    DepthGuard guard(*this, peek().location());
    if (at_keyword("lambda")) throw UnsupportedSyntax(peek().location(), "lambda", "lambdas are not supported");
    ExprPtr expr = parse_or();
    if (at_keyword("if")) {
      throw UnsupportedSyntax(peek().location(), "conditional expression",
                              "inline if/else expressions are not supported");
    }
    if (at_op(":=")) throw UnsupportedSyntax(peek().location(), ":=", "assignment expressions are not supported");
    return expr;
  }

  ExprPtr parse_bool_chain(BoolOpKind kind) {
    const std::string_view keyword = kind == BoolOpKind::kOr ? "or" : "and";
    const SourceLocation location = peek().location();
    ExprPtr first = kind == BoolOpKind::kOr ? parse_bool_chain(BoolOpKind::kAnd) : parse_not();
    if (!at_keyword(keyword)) return first;
    BoolOp op{kind, {}};
    op.operands.push_back(std::move(first));
    while (at_keyword(keyword)) {
      advance();
      op.operands.push_back(kind == BoolOpKind::kOr ? parse_bool_chain(BoolOpKind::kAnd) : parse_not());
    }
    return make(location, std::move(op));
  }

  ExprPtr parse_or() { return parse_bool_chain(BoolOpKind::kOr); }

  ExprPtr parse_not() {
    if (at_keyword("not")) {
      const SourceLocation location = advance().location();
      DepthGuard guard(*this, location);
      return make(location, UnaryNot{parse_not()});
    }
    return parse_comparison();
  }

  static bool compare_op(const Token& token, CompareOp& out) {
    if (token.kind != TokenKind::kOp) return false;
    if (token.text == "==") out = CompareOp::kEq;
    else if (token.text == "!=") out = CompareOp::kNe;
    else if (token.text == "<") out = CompareOp::kLt;
    else if (token.text == "<=") out = CompareOp::kLe;
    else if (token.text == ">") out = CompareOp::kGt;
    else if (token.text == ">=") out = CompareOp::kGe;
    else return false;
    return true;
  }

  void reject_membership_ops() const {
    if (at_keyword("in") || at_keyword("is") || (at_keyword("not") && peek(1).is_keyword("in"))) {
      throw UnsupportedSyntax(peek().location(), peek().text, "'" + peek().text + "' comparisons are not supported");
    }
  }

  ExprPtr parse_comparison() {
    const SourceLocation location = peek().location();
    ExprPtr lhs = parse_arith();
    reject_membership_ops();
    CompareOp op;
    if (!compare_op(peek(), op)) return lhs;
    advance();
    ExprPtr rhs = parse_arith();
    reject_membership_ops();
    CompareOp chained;
    if (compare_op(peek(), chained)) {
      throw UnsupportedSyntax(peek().location(), "chained comparison", "chained comparisons are not supported");
    }
    return make(location, Compare{op, std::move(lhs), std::move(rhs)});
  }

  // Each extra operand deepens the left-leaning tree, so it counts against the
  // nesting budget like a parenthesis would.
  void deepen(SourceLocation location, int& added) {
    ++added;
    if (++depth_ > options_.max_nesting) {
      throw UnsupportedSyntax(location, "nesting", "expression is nested too deeply");
    }
  }

  ExprPtr parse_arith() {
    ExprPtr lhs = parse_term();
    int added = 0;
    while (at_op("+") || at_op("-")) {
      const Token& token = advance();
      deepen(token.location(), added);
      const BinaryOp op = token.text == "+" ? BinaryOp::kAdd : BinaryOp::kSub;
      ExprPtr rhs = parse_term();
      const SourceLocation location = lhs->location;
      lhs = make(location, BinOp{op, std::move(lhs), std::move(rhs)});
    }
    depth_ -= added;
    return lhs;
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    int added = 0;
    while (at_op("*") || at_op("/") || at_op("%") || at_op("//") || at_op("**") || at_op("@")) {
      const Token& token = advance();
      deepen(token.location(), added);
      if (token.text == "//" || token.text == "**" || token.text == "@") {
        throw UnsupportedSyntax(token.location(), token.text, "operator not supported");
      }
      const BinaryOp op = token.text == "*" ? BinaryOp::kMul : token.text == "/" ? BinaryOp::kDiv : BinaryOp::kMod;
      ExprPtr rhs = parse_unary();
      const SourceLocation location = lhs->location;
      lhs = make(location, BinOp{op, std::move(lhs), std::move(rhs)});
    }
    depth_ -= added;
    return lhs;
  }

  ExprPtr parse_unary() {
    if (at_op("-") || at_op("+")) {
      const Token& sign = advance();
      const SourceLocation location = sign.location();
      const bool negate = sign.text == "-";
      DepthGuard guard(*this, location);
      ExprPtr operand = parse_unary();
      if (!negate) return operand;
      if (auto* literal = std::get_if<Literal>(&operand->node)) {
        if (auto* i = std::get_if<std::int64_t>(&literal->value)) {
          literal->value = -*i;
          operand->location = location;
          return operand;
        }
        if (auto* d = std::get_if<double>(&literal->value)) {
          literal->value = -*d;
          operand->location = location;
          return operand;
        }
      }
      ExprPtr zero = make(location, Literal{std::int64_t{0}});
      return make(location, BinOp{BinaryOp::kSub, std::move(zero), std::move(operand)});
    }
    if (at_op("~")) throw UnsupportedSyntax(peek().location(), "~", "operator not supported");
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    ExprPtr expr = parse_atom();
    while (true) {
      if (at_op("(")) {
        auto* name = std::get_if<Name>(&expr->node);
        if (name == nullptr) throw UnsupportedSyntax(peek().location(), "call", "only named functions can be called");
        expr = parse_call(name->id, expr->location);
        continue;
      }
      if (at_op("[")) throw UnsupportedSyntax(peek().location(), "indexing", "indexing and slicing are not supported");
      if (at_op(".")) throw UnsupportedSyntax(peek().location(), "attribute access", "attribute access is not supported");
      return expr;
    }
  }

  ExprPtr parse_call(const std::string& callee, SourceLocation location) {
    if (!builtin_functions().contains(callee) && !options_.allowed_primitives.contains(callee)) {
      throw UnsupportedSyntax(location, callee, "call to unknown function '" + callee + "'");
    }
    expect_op("(");
    Call call{callee, {}};
    while (!at_op(")")) {
      if (at_op("*") || at_op("**")) {
        throw UnsupportedSyntax(peek().location(), "argument unpacking", "argument unpacking is not supported");
      }
      if (at(TokenKind::kName) && peek(1).is_op("=")) {
        throw UnsupportedSyntax(peek().location(), "keyword argument", "keyword arguments are not supported");
      }
      call.args.push_back(parse_expression());
      if (at_op(",")) {
        advance();
      } else if (!at_op(")")) {
        unexpected(peek(), "',' or ')'");
      }
    }
    advance();
    return make(location, std::move(call));
  }

  ExprPtr parse_atom() {
    const Token& token = peek();
    const SourceLocation location = token.location();
    switch (token.kind) {
      case TokenKind::kName:
        advance();
        return make(location, Name{token.text});
      case TokenKind::kInt:
        advance();
        return make(location, Literal{std::int64_t{std::stoll(token.text)}});
      case TokenKind::kFloat:
        advance();
        return make(location, Literal{std::stod(token.text)});
      case TokenKind::kString: {
        std::string value;
        while (at(TokenKind::kString)) value += advance().text;
        return make(location, Literal{std::move(value)});
      }
      case TokenKind::kKeyword:
        if (token.text == "True" || token.text == "False") {
          advance();
          return make(location, Literal{token.text == "True"});
        }
        if (token.text == "None") {
          advance();
          return make(location, Literal{NoneLiteral{}});
        }
        throw UnsupportedSyntax(location, token.text, "'" + token.text + "' is not supported here");
      case TokenKind::kOp:
        if (token.text == "(") {
          advance();
          if (at_op(")")) throw UnsupportedSyntax(location, "empty tuple", "empty tuples are not supported");
          ExprPtr inner = parse_expr_list();
          expect_op(")");
          return inner;
        }
        if (token.text == "[") throw UnsupportedSyntax(location, "list literal", "list literals are not supported");
        if (token.text == "{") throw UnsupportedSyntax(location, "dict literal", "dict and set literals are not supported");
        break;
      default:
        break;
    }
    unexpected(token, "an expression");
  }

  const std::vector<Token>& tokens_;
  const ParseOptions& options_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

Program parse(const std::vector<Token>& tokens, const ParseOptions& options) {
  return Parser(tokens, options).parse_program();
}

Program parse_source(std::string_view source, const ParseOptions& options) {
  return parse(tokenize(source), options);
}

}  // namespace codevqa::lang
