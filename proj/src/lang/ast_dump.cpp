#include "codevqa/lang/ast_dump.hpp"

#include <sstream>

namespace codevqa::lang {

using nlohmann::json;

namespace {

std::string literal_text(const LiteralValue& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NoneLiteral>) {
          return "None";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return json(v).dump();
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "True" : "False";
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream out;
          out << v;
          return out.str();
        } else {
          return std::to_string(v);
        }
      },
      value);
}

json literal_json(const LiteralValue& value) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NoneLiteral>) {
          return nullptr;
        } else {
          return v;
        }
      },
      value);
}

class TextDumper {
 public:
  std::string str() const { return out_.str(); }

  void block(const Block& body, int depth) {
    for (const auto& stmt : body) statement(stmt, depth);
  }

 private:
  void line(int depth, const std::string& text) { out_ << std::string(depth * 2, ' ') << text << '\n'; }

  void statement(const Stmt& stmt, int depth) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Assign>) {
            std::string targets;
            for (std::size_t i = 0; i < node.targets.size(); ++i) {
              if (i > 0) targets += ", ";
              targets += node.targets[i];
            }
            line(depth, std::string(node.tuple_target ? "Assign(tuple " : "Assign(") + targets + ")");
            expr(*node.value, depth + 1);
          } else if constexpr (std::is_same_v<T, AugAssign>) {
            line(depth, "AugAssign(" + node.target + " " + std::string(to_string(node.op)) + "=)");
            expr(*node.value, depth + 1);
          } else if constexpr (std::is_same_v<T, For>) {
            line(depth, "For(" + node.loop_var + ")");
            expr(*node.iterable, depth + 1);
            line(depth + 1, "Body");
            block(node.body, depth + 2);
          } else if constexpr (std::is_same_v<T, If>) {
            line(depth, "If");
            for (std::size_t i = 0; i < node.branches.size(); ++i) {
              line(depth + 1, i == 0 ? "Condition" : "ElifCondition");
              expr(*node.branches[i].condition, depth + 2);
              line(depth + 1, "Then");
              block(node.branches[i].body, depth + 2);
            }
            if (!node.else_body.empty()) {
              line(depth + 1, "Else");
              block(node.else_body, depth + 2);
            }
          } else {
            line(depth, "ExprStmt");
            expr(*node.expr, depth + 1);
          }
        },
        stmt.node);
  }

  void expr(const Expr& e, int depth) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Literal>) {
            line(depth, "Literal(" + literal_text(node.value) + ")");
          } else if constexpr (std::is_same_v<T, Name>) {
            line(depth, "Name(" + node.id + ")");
          } else if constexpr (std::is_same_v<T, Call>) {
            line(depth, "Call(" + node.callee + ")");
            for (const auto& arg : node.args) expr(*arg, depth + 1);
          } else if constexpr (std::is_same_v<T, BinOp>) {
            line(depth, "BinOp(" + std::string(to_string(node.op)) + ")");
            expr(*node.lhs, depth + 1);
            expr(*node.rhs, depth + 1);
          } else if constexpr (std::is_same_v<T, Compare>) {
            line(depth, "Compare(" + std::string(to_string(node.op)) + ")");
            expr(*node.lhs, depth + 1);
            expr(*node.rhs, depth + 1);
          } else if constexpr (std::is_same_v<T, BoolOp>) {
            line(depth, "BoolOp(" + std::string(to_string(node.op)) + ")");
            for (const auto& operand : node.operands) expr(*operand, depth + 1);
          } else if constexpr (std::is_same_v<T, UnaryNot>) {
            line(depth, "Not");
            expr(*node.operand, depth + 1);
          } else {
            line(depth, "Tuple");
            for (const auto& item : node.items) expr(*item, depth + 1);
          }
        },
        e.node);
  }

  std::ostringstream out_;
};

json location_json(SourceLocation location) { return {{"line", location.line}, {"column", location.column}}; }

json expr_json(const Expr& e);

json exprs_json(const std::vector<ExprPtr>& exprs) {
  json out = json::array();
  for (const auto& e : exprs) out.push_back(expr_json(*e));
  return out;
}

json expr_json(const Expr& e) {
  json out = std::visit(
      [](const auto& node) -> json {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return {{"type", "Literal"}, {"value", literal_json(node.value)}};
        } else if constexpr (std::is_same_v<T, Name>) {
          return {{"type", "Name"}, {"id", node.id}};
        } else if constexpr (std::is_same_v<T, Call>) {
          return {{"type", "Call"}, {"name", node.callee}, {"args", exprs_json(node.args)}};
        } else if constexpr (std::is_same_v<T, BinOp>) {
          return {{"type", "BinOp"}, {"op", to_string(node.op)}, {"lhs", expr_json(*node.lhs)}, {"rhs", expr_json(*node.rhs)}};
        } else if constexpr (std::is_same_v<T, Compare>) {
          return {{"type", "Compare"}, {"op", to_string(node.op)}, {"lhs", expr_json(*node.lhs)}, {"rhs", expr_json(*node.rhs)}};
        } else if constexpr (std::is_same_v<T, BoolOp>) {
          return {{"type", "BoolOp"}, {"op", to_string(node.op)}, {"operands", exprs_json(node.operands)}};
        } else if constexpr (std::is_same_v<T, UnaryNot>) {
          return {{"type", "UnaryNot"}, {"operand", expr_json(*node.operand)}};
        } else {
          return {{"type", "Tuple"}, {"items", exprs_json(node.items)}};
        }
      },
      e.node);
  out["loc"] = location_json(e.location);
  return out;
}

json block_json(const Block& body);

json stmt_json(const Stmt& stmt) {
  json out = std::visit(
      [](const auto& node) -> json {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Assign>) {
          return {{"type", "Assign"}, {"targets", node.targets}, {"tuple_target", node.tuple_target}, {"value", expr_json(*node.value)}};
        } else if constexpr (std::is_same_v<T, AugAssign>) {
          return {{"type", "AugAssign"}, {"target", node.target}, {"op", to_string(node.op)}, {"value", expr_json(*node.value)}};
        } else if constexpr (std::is_same_v<T, For>) {
          return {{"type", "For"}, {"var", node.loop_var}, {"iter", expr_json(*node.iterable)}, {"body", block_json(node.body)}};
        } else if constexpr (std::is_same_v<T, If>) {
          json branches = json::array();
          for (const auto& branch : node.branches) {
            branches.push_back({{"condition", expr_json(*branch.condition)}, {"body", block_json(branch.body)}});
          }
          return {{"type", "If"}, {"branches", branches}, {"else", block_json(node.else_body)}};
        } else {
          return {{"type", "ExprStmt"}, {"expr", expr_json(*node.expr)}};
        }
      },
      stmt.node);
  out["loc"] = location_json(stmt.location);
  return out;
}

json block_json(const Block& body) {
  json out = json::array();
  for (const auto& stmt : body) out.push_back(stmt_json(stmt));
  return out;
}

}  // namespace

std::string dump_text(const Program& program) {
  TextDumper dumper;
  dumper.block(program.body, 0);
  return dumper.str();
}

json dump_json(const Program& program) { return {{"type", "Program"}, {"body", block_json(program.body)}}; }

}  // namespace codevqa::lang
