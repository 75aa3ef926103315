#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "codevqa/core/error.hpp"
#include "codevqa/core/types.hpp"
#include "codevqa/lang/token.hpp"

namespace codevqa::lang {

// Opaque reference to one of the instance's images. `index` is the position
// in the instance's image list.
struct ImageHandle {
  std::size_t index = 0;
  std::string ref;
  bool operator==(const ImageHandle&) const = default;
};

struct NoneValue {
  bool operator==(const NoneValue&) const = default;
};

using ImageList = std::vector<ImageHandle>;
using DetectionList = std::vector<Detection>;

using Value = std::variant<NoneValue, std::string, std::int64_t, double, bool, ImageHandle, ImageList,
                           Position, DetectionList>;

enum class RuntimeErrorKind {
  kUnboundName,
  kTypeMismatch,
  kConversionFailure,
  kMissingAnswer,
  kStepBudgetExceeded,
  kPrimitiveFailure,
  kDivisionByZero,
  kArithmeticOverflow,
};

std::string_view to_string(RuntimeErrorKind kind);

struct RuntimeError {
  RuntimeErrorKind kind = RuntimeErrorKind::kTypeMismatch;
  std::string message;
  SourceLocation location;
  bool operator==(const RuntimeError&) const = default;
};

// Thrown inside the interpreter and by stringify_answer; execute() converts it
// into an ExecutionResult.
class RuntimeFault : public Error {
 public:
  explicit RuntimeFault(RuntimeError error)
      : Error(std::string(to_string(error.kind)) + " at " + to_string(error.location) + ": " + error.message),
        error_(std::move(error)) {}

  const RuntimeError& error() const { return error_; }

 private:
  RuntimeError error_;
};

std::string_view type_name(const Value& value);

// Shortest round-trip decimal without trailing zeros ("2", "0.5", "1e+20").
std::string format_float(double value);

// Human-readable rendering used for primitive-call traces.
std::string describe(const Value& value);

// Int -> decimal, Bool -> "yes"/"no", Str -> itself, Float -> format_float.
// Throws RuntimeFault(TypeMismatch) for every other kind.
std::string stringify_answer(const Value& value);

}  // namespace codevqa::lang
