#include "codevqa/lang/value.hpp"

#include <charconv>
#include <cmath>

#include "json.hpp"

namespace codevqa::lang {

std::string_view to_string(RuntimeErrorKind kind) {
  switch (kind) {
    case RuntimeErrorKind::kUnboundName: return "UnboundName";
    case RuntimeErrorKind::kTypeMismatch: return "TypeMismatch";
    case RuntimeErrorKind::kConversionFailure: return "ConversionFailure";
    case RuntimeErrorKind::kMissingAnswer: return "MissingAnswer";
    case RuntimeErrorKind::kStepBudgetExceeded: return "StepBudgetExceeded";
    case RuntimeErrorKind::kPrimitiveFailure: return "PrimitiveFailure";
    case RuntimeErrorKind::kDivisionByZero: return "DivisionByZero";
    case RuntimeErrorKind::kArithmeticOverflow: return "ArithmeticOverflow";
  }
  return "?";
}

std::string_view type_name(const Value& value) {
  static constexpr std::string_view kNames[] = {"None",  "str",       "int", "float", "bool", "Image",
                                                "List[Image]", "position", "List[Object]"};
  return kNames[value.index()];
}

std::string format_float(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "nan";
  return std::string(buffer, ptr);
}

namespace {

std::string describe_image(const ImageHandle& image) {
  return "<image " + std::to_string(image.index) + ":" + image.ref + ">";
}

}  // namespace

std::string describe(const Value& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NoneValue>) {
          return "None";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return nlohmann::json(v).dump();
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_float(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "True" : "False";
        } else if constexpr (std::is_same_v<T, ImageHandle>) {
          return describe_image(v);
        } else if constexpr (std::is_same_v<T, ImageList>) {
          std::string out = "[";
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) out += ", ";
            out += describe_image(v[i]);
          }
          return out + "]";
        } else if constexpr (std::is_same_v<T, Position>) {
          return "(" + format_float(v.x) + ", " + format_float(v.y) + ")";
        } else {
          std::string out = "[";
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) out += ", ";
            out += v[i].label + "@" + format_float(v[i].score);
          }
          return out + "]";
        }
      },
      value);
}

std::string stringify_answer(const Value& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&value)) return *b ? "yes" : "no";
  if (const auto* d = std::get_if<double>(&value)) return format_float(*d);
  throw RuntimeFault(RuntimeError{RuntimeErrorKind::kTypeMismatch,
                                  "answer must be a str, int, float or bool, not " + std::string(type_name(value)),
                                  {}});
}

}  // namespace codevqa::lang
