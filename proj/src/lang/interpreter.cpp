#include "codevqa/lang/interpreter.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include "codevqa/core/text.hpp"

namespace codevqa::lang {

namespace {

[[noreturn]] void fail(RuntimeErrorKind kind, SourceLocation location, std::string message) {
  throw RuntimeFault(RuntimeError{kind, std::move(message), location});
}

[[noreturn]] void mismatch(SourceLocation location, std::string message) {
  fail(RuntimeErrorKind::kTypeMismatch, location, std::move(message));
}

bool is_number(const Value& v) {
  return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

double as_double(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

// Python-style modulo: result takes the sign of the divisor.
std::int64_t int_mod(std::int64_t a, std::int64_t b) {
  std::int64_t r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) r += b;
  return r;
}

double float_mod(double a, double b) {
  double r = std::fmod(a, b);
  if (r != 0.0 && ((r < 0.0) != (b < 0.0))) r += b;
  return r;
}

class Interpreter {
 public:
  Interpreter(PrimitiveDispatcher& primitives, std::span<const ImageHandle> images, const InterpreterLimits& limits,
              const CoordinateFrame& frame)
      : primitives_(primitives), images_(images.begin(), images.end()), limits_(limits) {
    bind_constant("LEFT", frame.left);
    bind_constant("BOTTOM", frame.bottom);
    bind_constant("RIGHT", frame.right);
    bind_constant("TOP", frame.top);
  }

  ExecutionResult run(const Program& program) {
    ExecutionResult result;
    try {
      exec_block(program.body);
      auto it = env_.find("answer");
      if (it == env_.end()) {
        fail(RuntimeErrorKind::kMissingAnswer, {}, "program finished without binding 'answer'");
      }
      result.outcome = Answer{stringify_answer(it->second)};
    } catch (const RuntimeFault& fault) {
      RuntimeError error = fault.error();
      if (error.location == SourceLocation{} && last_location_ != SourceLocation{}) {
        error.location = last_location_;
      }
      result.outcome = std::move(error);
    }
    result.trace = std::move(trace_);
    result.steps = steps_;
    return result;
  }

 private:
  void tick(SourceLocation location) {
    last_location_ = location;
    if (++steps_ > limits_.max_steps) {
      fail(RuntimeErrorKind::kStepBudgetExceeded, location,
           "exceeded " + std::to_string(limits_.max_steps) + " steps");
    }
  }

  void exec_block(const Block& body) {
    for (const auto& stmt : body) exec(stmt);
  }

  void exec(const Stmt& stmt) {
    tick(stmt.location);
    std::visit([&](const auto& node) { exec_node(node, stmt.location); }, stmt.node);
  }

  void exec_node(const Assign& node, SourceLocation location) {
    if (!node.tuple_target) {
      if (std::holds_alternative<TupleExpr>(node.value->node)) {
        mismatch(location, "cannot assign a tuple to a single name");
      }
      env_[node.targets.front()] = eval(*node.value);
      return;
    }
    std::vector<Value> parts;
    if (const auto* tuple = std::get_if<TupleExpr>(&node.value->node)) {
      for (const auto& item : tuple->items) parts.push_back(eval(*item));
    } else {
      Value value = eval(*node.value);
      if (const auto* pos = std::get_if<Position>(&value)) {
        parts = {pos->x, pos->y};
      } else {
        mismatch(location, "cannot unpack " + std::string(type_name(value)));
      }
    }
    if (parts.size() != node.targets.size()) {
      mismatch(location, "expected " + std::to_string(node.targets.size()) + " values to unpack, got " +
                             std::to_string(parts.size()));
    }
    for (std::size_t i = 0; i < parts.size(); ++i) env_[node.targets[i]] = std::move(parts[i]);
  }

  void exec_node(const AugAssign& node, SourceLocation location) {
    auto it = env_.find(node.target);
    if (it == env_.end()) fail(RuntimeErrorKind::kUnboundName, location, "name '" + node.target + "' is not defined");
    Value rhs = eval(*node.value);
    Value current = it->second;
    env_[node.target] = binary(node.op, current, rhs, location);
  }

  void exec_node(const For& node, SourceLocation location) {
    Value iterable = eval(*node.iterable);
    const auto* list = std::get_if<ImageList>(&iterable);
    if (list == nullptr) mismatch(location, "can only iterate over a list of images, not " + std::string(type_name(iterable)));
    const ImageList items = *list;
    std::int64_t iterations = 0;
    for (const auto& image : items) {
      if (++iterations > limits_.max_loop_iterations) {
        fail(RuntimeErrorKind::kStepBudgetExceeded, location,
             "loop exceeded " + std::to_string(limits_.max_loop_iterations) + " iterations");
      }
      env_[node.loop_var] = image;
      exec_block(node.body);
    }
  }

  void exec_node(const If& node, SourceLocation) {
    for (const auto& branch : node.branches) {
      if (condition(*branch.condition)) {
        exec_block(branch.body);
        return;
      }
    }
    exec_block(node.else_body);
  }

  void exec_node(const ExprStmt& node, SourceLocation) { eval(*node.expr); }

  bool condition(const Expr& expr) {
    Value value = eval(expr);
    const auto* b = std::get_if<bool>(&value);
    if (b == nullptr) mismatch(expr.location, "condition must be a bool, not " + std::string(type_name(value)));
    return *b;
  }

  Value eval(const Expr& expr) {
    tick(expr.location);
    return std::visit([&](const auto& node) { return eval_node(node, expr.location); }, expr.node);
  }

  Value eval_node(const Literal& node, SourceLocation) {
    return std::visit(
        [](const auto& v) -> Value {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, NoneLiteral>) {
            return NoneValue{};
          } else {
            return v;
          }
        },
        node.value);
  }

  Value eval_node(const Name& node, SourceLocation location) {
    auto it = env_.find(node.id);
    if (it == env_.end()) fail(RuntimeErrorKind::kUnboundName, location, "name '" + node.id + "' is not defined");
    return it->second;
  }

  Value eval_node(const TupleExpr&, SourceLocation location) {
    mismatch(location, "tuples are only supported on the right of an unpacking assignment");
  }

  Value eval_node(const UnaryNot& node, SourceLocation) { return !condition(*node.operand); }

  Value eval_node(const BoolOp& node, SourceLocation) {
    const bool is_and = node.op == BoolOpKind::kAnd;
    for (const auto& operand : node.operands) {
      const bool value = condition(*operand);
      if (is_and && !value) return false;
      if (!is_and && value) return true;
    }
    return is_and;
  }

  Value eval_node(const BinOp& node, SourceLocation location) {
    Value lhs = eval(*node.lhs);
    Value rhs = eval(*node.rhs);
    return binary(node.op, lhs, rhs, location);
  }

  Value binary(BinaryOp op, const Value& lhs, const Value& rhs, SourceLocation location) {
    if (op == BinaryOp::kAdd && std::holds_alternative<std::string>(lhs) && std::holds_alternative<std::string>(rhs)) {
      return std::get<std::string>(lhs) + std::get<std::string>(rhs);
    }
    if (!is_number(lhs) || !is_number(rhs)) {
      mismatch(location, "unsupported operand types for " + std::string(to_string(op)) + ": " +
                             std::string(type_name(lhs)) + " and " + std::string(type_name(rhs)));
    }
    const bool ints = std::holds_alternative<std::int64_t>(lhs) && std::holds_alternative<std::int64_t>(rhs);
    if (ints && op != BinaryOp::kDiv) {
      const std::int64_t a = std::get<std::int64_t>(lhs);
      const std::int64_t b = std::get<std::int64_t>(rhs);
      std::int64_t out = 0;
      bool overflow = false;
      switch (op) {
        case BinaryOp::kAdd: overflow = __builtin_add_overflow(a, b, &out); break;
        case BinaryOp::kSub: overflow = __builtin_sub_overflow(a, b, &out); break;
        case BinaryOp::kMul: overflow = __builtin_mul_overflow(a, b, &out); break;
        case BinaryOp::kMod:
          if (b == 0) fail(RuntimeErrorKind::kDivisionByZero, location, "integer modulo by zero");
          if (b == -1) return std::int64_t{0};
          out = int_mod(a, b);
          break;
        case BinaryOp::kDiv: break;
      }
      if (overflow) fail(RuntimeErrorKind::kArithmeticOverflow, location, "integer overflow");
      return out;
    }
    const double a = as_double(lhs);
    const double b = as_double(rhs);
    switch (op) {
      case BinaryOp::kAdd: return a + b;
      case BinaryOp::kSub: return a - b;
      case BinaryOp::kMul: return a * b;
      case BinaryOp::kDiv:
        if (b == 0.0) fail(RuntimeErrorKind::kDivisionByZero, location, "division by zero");
        return a / b;
      case BinaryOp::kMod:
        if (b == 0.0) fail(RuntimeErrorKind::kDivisionByZero, location, "float modulo by zero");
        return float_mod(a, b);
    }
    return NoneValue{};
  }

  Value eval_node(const Compare& node, SourceLocation location) {
    Value lhs = eval(*node.lhs);
    Value rhs = eval(*node.rhs);
    const bool equality = node.op == CompareOp::kEq || node.op == CompareOp::kNe;
    auto finish_equality = [&](bool equal) -> Value { return node.op == CompareOp::kEq ? equal : !equal; };
    auto order = [&](auto a, auto b) -> Value {
      switch (node.op) {
        case CompareOp::kEq: return a == b;
        case CompareOp::kNe: return a != b;
        case CompareOp::kLt: return a < b;
        case CompareOp::kLe: return a <= b;
        case CompareOp::kGt: return a > b;
        case CompareOp::kGe: return a >= b;
      }
      return false;
    };

    if (is_number(lhs) && is_number(rhs)) {
      if (std::holds_alternative<std::int64_t>(lhs) && std::holds_alternative<std::int64_t>(rhs)) {
        return order(std::get<std::int64_t>(lhs), std::get<std::int64_t>(rhs));
      }
      return order(as_double(lhs), as_double(rhs));
    }
    if (std::holds_alternative<std::string>(lhs) && std::holds_alternative<std::string>(rhs)) {
      return order(std::get<std::string>(lhs), std::get<std::string>(rhs));
    }
    if (equality) {
      if (std::holds_alternative<NoneValue>(lhs) || std::holds_alternative<NoneValue>(rhs)) {
        return finish_equality(lhs.index() == rhs.index());
      }
      if (std::holds_alternative<bool>(lhs) && std::holds_alternative<bool>(rhs)) {
        return finish_equality(std::get<bool>(lhs) == std::get<bool>(rhs));
      }
      if (std::holds_alternative<ImageHandle>(lhs) && std::holds_alternative<ImageHandle>(rhs)) {
        return finish_equality(std::get<ImageHandle>(lhs).index == std::get<ImageHandle>(rhs).index);
      }
    }
    mismatch(location, "cannot compare " + std::string(type_name(lhs)) + " " + std::string(to_string(node.op)) + " " +
                           std::string(type_name(rhs)));
  }

  Value eval_node(const Call& node, SourceLocation location) {
    std::vector<Value> args;
    args.reserve(node.args.size());
    for (const auto& arg : node.args) args.push_back(eval(*arg));
    if (visual_primitives().contains(node.callee)) return call_primitive(node.callee, args, location);
    return call_builtin(node.callee, args, location);
  }

  void arity(const std::string& name, const std::vector<Value>& args, std::size_t expected, SourceLocation location) {
    if (args.size() != expected) {
      mismatch(location, name + "() takes " + std::to_string(expected) + " argument(s), got " + std::to_string(args.size()));
    }
  }

  template <typename T>
  const T& arg_as(const std::string& name, const std::vector<Value>& args, std::size_t index, SourceLocation location,
                  std::string_view expected) {
    const auto* value = std::get_if<T>(&args[index]);
    if (value == nullptr) {
      mismatch(location, name + "() argument " + std::to_string(index + 1) + " must be " + std::string(expected) +
                             ", not " + std::string(type_name(args[index])));
    }
    return *value;
  }

  Value call_primitive(const std::string& name, const std::vector<Value>& args, SourceLocation location) {
    if (static_cast<std::int64_t>(trace_.size()) >= limits_.max_primitive_calls) {
      fail(RuntimeErrorKind::kStepBudgetExceeded, location,
           "exceeded " + std::to_string(limits_.max_primitive_calls) + " primitive calls");
    }
    PrimitiveCall record{name, {}, "", false};
    for (const auto& arg : args) record.args.push_back(describe(arg));

    // Argument checking happens before the call is traced: a badly typed call
    // never reaches the backend.
    if (name == "knowledge_query") {
      arity(name, args, 1, location);
      arg_as<std::string>(name, args, 0, location, "str");
    } else {
      arity(name, args, 2, location);
      if (name == "find_matching_image") {
        arg_as<ImageList>(name, args, 0, location, "List[Image]");
      } else {
        arg_as<ImageHandle>(name, args, 0, location, "Image");
      }
      arg_as<std::string>(name, args, 1, location, "str");
    }

    try {
      Value result;
      if (name == "query") {
        result = primitives_.query(std::get<ImageHandle>(args[0]), std::get<std::string>(args[1]));
      } else if (name == "get_pos") {
        result = primitives_.get_pos(std::get<ImageHandle>(args[0]), std::get<std::string>(args[1]));
      } else if (name == "find_matching_image") {
        const auto& list = std::get<ImageList>(args[0]);
        if (list.empty()) throw PrimitiveError("find_matching_image() called with an empty image list");
        result = primitives_.find_matching_image(list, std::get<std::string>(args[1]));
      } else if (name == "find_object") {
        result = primitives_.find_object(std::get<ImageHandle>(args[0]), std::get<std::string>(args[1]));
      } else {
        result = primitives_.knowledge_query(std::get<std::string>(args[0]));
      }
      record.result = describe(result);
      trace_.push_back(std::move(record));
      return result;
    } catch (const RuntimeFault&) {
      throw;
    } catch (const std::exception& e) {
      record.result = e.what();
      record.failed = true;
      trace_.push_back(std::move(record));
      fail(RuntimeErrorKind::kPrimitiveFailure, location, name + "() failed: " + e.what());
    }
  }

  Value call_builtin(const std::string& name, const std::vector<Value>& args, SourceLocation location) {
    if (name == "open_image" || name == "open_images") {
      arity(name, args, 1, location);
      arg_as<std::string>(name, args, 0, location, "str");
      if (images_.empty()) fail(RuntimeErrorKind::kPrimitiveFailure, location, "no images are bound to this instance");
      if (name == "open_image") return images_.front();
      return images_;
    }
    if (name == "int") return to_int(args, location);
    if (name == "float") return to_float(args, location);
    if (name == "str") {
      arity(name, args, 1, location);
      try {
        return stringify_answer(args[0]);
      } catch (const RuntimeFault&) {
        mismatch(location, "str() cannot convert " + std::string(type_name(args[0])));
      }
    }
    if (name == "len") {
      arity(name, args, 1, location);
      if (const auto* s = std::get_if<std::string>(&args[0])) return static_cast<std::int64_t>(s->size());
      if (const auto* l = std::get_if<ImageList>(&args[0])) return static_cast<std::int64_t>(l->size());
      if (const auto* d = std::get_if<DetectionList>(&args[0])) return static_cast<std::int64_t>(d->size());
      mismatch(location, "len() of " + std::string(type_name(args[0])));
    }
    if (name == "abs") {
      arity(name, args, 1, location);
      if (const auto* i = std::get_if<std::int64_t>(&args[0])) {
        if (*i == std::numeric_limits<std::int64_t>::min()) fail(RuntimeErrorKind::kArithmeticOverflow, location, "integer overflow");
        return *i < 0 ? -*i : *i;
      }
      if (const auto* d = std::get_if<double>(&args[0])) return std::fabs(*d);
      mismatch(location, "abs() of " + std::string(type_name(args[0])));
    }
    if (name == "min" || name == "max") {
      if (args.size() < 2) mismatch(location, name + "() needs at least 2 arguments");
      std::size_t best = 0;
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (!is_number(args[i])) mismatch(location, name + "() arguments must be numbers, not " + std::string(type_name(args[i])));
        if (i == 0) continue;
        const double candidate = as_double(args[i]);
        const double current = as_double(args[best]);
        if (name == "min" ? candidate < current : candidate > current) best = i;
      }
      return args[best];
    }
    mismatch(location, "unknown function '" + name + "'");
  }

  Value to_int(const std::vector<Value>& args, SourceLocation location) {
    arity("int", args, 1, location);
    const Value& v = args[0];
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* d = std::get_if<double>(&v)) {
      if (!std::isfinite(*d) || std::trunc(*d) >= 9.2233720368547758e18 || std::trunc(*d) < -9.2233720368547758e18) {
        fail(RuntimeErrorKind::kConversionFailure, location, "int() cannot convert " + format_float(*d));
      }
      return static_cast<std::int64_t>(std::trunc(*d));
    }
    if (const auto* s = std::get_if<std::string>(&v)) {
      const std::string text = trim(*s);
      std::string_view digits = text;
      bool negative = false;
      if (!digits.empty() && (digits.front() == '+' || digits.front() == '-')) {
        negative = digits.front() == '-';
        digits.remove_prefix(1);
      }
      const bool all_digits = !digits.empty() && digits.find_first_not_of("0123456789") == std::string_view::npos;
      std::int64_t magnitude = 0;
      if (all_digits) {
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), magnitude);
        if (ec == std::errc() && ptr == digits.data() + digits.size()) return negative ? -magnitude : magnitude;
      }
      fail(RuntimeErrorKind::kConversionFailure, location, "int() cannot parse " + describe(v));
    }
    fail(RuntimeErrorKind::kConversionFailure, location, "int() cannot convert " + std::string(type_name(v)));
  }

  Value to_float(const std::vector<Value>& args, SourceLocation location) {
    arity("float", args, 1, location);
    const Value& v = args[0];
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* s = std::get_if<std::string>(&v)) {
      std::string text = trim(*s);
      std::string_view view = text;
      if (!view.empty() && view.front() == '+') view.remove_prefix(1);
      double out = 0.0;
      auto [ptr, ec] = std::from_chars(view.data(), view.data() + view.size(), out);
      if (!view.empty() && ec == std::errc() && ptr == view.data() + view.size()) return out;
      fail(RuntimeErrorKind::kConversionFailure, location, "float() cannot parse " + describe(v));
    }
    fail(RuntimeErrorKind::kConversionFailure, location, "float() cannot convert " + std::string(type_name(v)));
  }

  PrimitiveDispatcher& primitives_;
  // Whole numbers bind as ints so "RIGHT = 24" behaves like the literal.
  void bind_constant(const std::string& name, double v) {
    if (std::isfinite(v) && v == std::trunc(v) && std::abs(v) < 9.0e15) {
      env_[name] = static_cast<std::int64_t>(v);
    } else {
      env_[name] = v;
    }
  }

  ImageList images_;
  const InterpreterLimits& limits_;
  std::map<std::string, Value> env_;
  std::vector<PrimitiveCall> trace_;
  std::int64_t steps_ = 0;
  SourceLocation last_location_;
};

}  // namespace

ExecutionResult execute(const Program& program, PrimitiveDispatcher& primitives, std::span<const ImageHandle> images,
                        const InterpreterLimits& limits, const CoordinateFrame& frame) {
  return Interpreter(primitives, images, limits, frame).run(program);
}

}  // namespace codevqa::lang
