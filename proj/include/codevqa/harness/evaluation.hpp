#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "codevqa/core/error.hpp"
#include "codevqa/core/types.hpp"
#include "json.hpp"

namespace codevqa::harness {

class MissingRecord : public Error {
 public:
  using Error::Error;
};

class UnknownKey : public Error {
 public:
  using Error::Error;
};

enum class ScoreMode { kExact, kSoft };

std::string to_string(ScoreMode mode);
ScoreMode score_mode_from_string(const std::string& text);

// Exact: 1 when the lowercased prediction equals any lowercased gold, else 0.
// Soft (VQAv2 consensus): min(#golds equal to the prediction / 3, 1).
double score_answer(const std::string& predicted, const std::vector<std::string>& golds, ScoreMode mode);

struct GroupStats {
  std::size_t count = 0;
  double correct = 0.0;
  double accuracy() const { return count == 0 ? 0.0 : correct / static_cast<double>(count); }
  bool operator==(const GroupStats&) const = default;
};

struct EvalReport {
  ScoreMode score_mode = ScoreMode::kExact;
  std::size_t total = 0;
  double correct = 0.0;
  std::size_t fallback_count = 0;
  // Untagged instances land in "untagged".
  std::map<std::string, GroupStats> by_question_type;
  std::map<std::size_t, GroupStats> by_num_images;
  bool partial = false;

  double accuracy() const { return total == 0 ? 0.0 : correct / static_cast<double>(total); }
  double fallback_rate() const {
    return total == 0 ? 0.0 : static_cast<double>(fallback_count) / static_cast<double>(total);
  }
};

inline constexpr const char* kUntagged = "untagged";

// One record per instance, matched by id; records for unknown ids are
// ignored. Aggregation is a sum, so record order does not matter.
EvalReport evaluate(const std::vector<AnswerRecord>& records, const std::vector<VQAInstance>& instances,
                    ScoreMode mode = ScoreMode::kExact);

struct BreakdownRow {
  std::string group;
  std::size_t count = 0;
  double accuracy = 0.0;
  bool operator==(const BreakdownRow&) const = default;
};

// key is "question_type" or "num_images"; anything else throws UnknownKey.
// Empty groups never appear; num_images rows are in numeric order.
std::vector<BreakdownRow> breakdown(const EvalReport& report, const std::string& key);

// Plain-text table: group, count, accuracy as a percentage with one decimal.
std::string format_breakdown(const std::string& title, const std::vector<BreakdownRow>& rows);

nlohmann::json to_json(const EvalReport& report);

}  // namespace codevqa::harness
