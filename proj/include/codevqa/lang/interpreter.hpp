#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "codevqa/core/error.hpp"
#include "codevqa/core/types.hpp"
#include "codevqa/lang/ast.hpp"
#include "codevqa/lang/value.hpp"

namespace codevqa::lang {

// Raised by primitive implementations; surfaces as RuntimeErrorKind::kPrimitiveFailure.
class PrimitiveError : public Error {
 public:
  using Error::Error;
};

// Resolves the visual primitives a program calls. Implementations own any
// randomness they need, so a seeded dispatcher makes execution deterministic.
class PrimitiveDispatcher {
 public:
  virtual ~PrimitiveDispatcher() = default;

  virtual std::string query(const ImageHandle& image, const std::string& question) = 0;
  virtual Position get_pos(const ImageHandle& image, const std::string& text) = 0;
  virtual ImageHandle find_matching_image(const ImageList& images, const std::string& text) = 0;
  virtual DetectionList find_object(const ImageHandle& image, const std::string& description) = 0;
  virtual std::string knowledge_query(const std::string& question) = 0;
};

struct PrimitiveCall {
  std::string name;
  std::vector<std::string> args;
  // Rendered result, or the error message when failed.
  std::string result;
  bool failed = false;
  bool operator==(const PrimitiveCall&) const = default;
};

struct Answer {
  std::string text;
  bool operator==(const Answer&) const = default;
};

struct ExecutionResult {
  std::variant<Answer, RuntimeError> outcome;
  std::vector<PrimitiveCall> trace;
  std::int64_t steps = 0;

  bool ok() const { return std::holds_alternative<Answer>(outcome); }
  const Answer* answer() const { return std::get_if<Answer>(&outcome); }
  const RuntimeError* error() const { return std::get_if<RuntimeError>(&outcome); }
  bool operator==(const ExecutionResult&) const = default;
};

// Runs the program in one flat scope that starts with the frame constants
// LEFT, BOTTOM, RIGHT and TOP bound, as the prompt preamble declares them.
// open_image binds images[0] and open_images binds the whole list. Never
// throws for program faults; every failure comes back as a RuntimeError.
ExecutionResult execute(const Program& program, PrimitiveDispatcher& primitives, std::span<const ImageHandle> images,
                        const InterpreterLimits& limits, const CoordinateFrame& frame = {});

}  // namespace codevqa::lang
