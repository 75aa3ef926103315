#include "codevqa/harness/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "codevqa/core/text.hpp"

namespace codevqa::harness {

std::string to_string(ScoreMode mode) { return mode == ScoreMode::kExact ? "exact" : "soft"; }

ScoreMode score_mode_from_string(const std::string& text) {
  if (text == "exact") return ScoreMode::kExact;
  if (text == "soft") return ScoreMode::kSoft;
  throw ConfigError("score_mode", "expected exact or soft, got '" + text + "'");
}

double score_answer(const std::string& predicted, const std::vector<std::string>& golds, ScoreMode mode) {
  const std::string p = to_lower(predicted);
  std::size_t hits = 0;
  for (const auto& g : golds) {
    if (to_lower(g) == p) ++hits;
  }
  if (mode == ScoreMode::kExact) return hits > 0 ? 1.0 : 0.0;
  return std::min(static_cast<double>(hits) / 3.0, 1.0);
}

EvalReport evaluate(const std::vector<AnswerRecord>& records, const std::vector<VQAInstance>& instances,
                    ScoreMode mode) {
  std::unordered_map<std::string, const AnswerRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.instance_id, &r);

  EvalReport report;
  report.score_mode = mode;
  for (const auto& instance : instances) {
    auto it = by_id.find(instance.id);
    if (it == by_id.end()) throw MissingRecord("no answer record for instance '" + instance.id + "'");
    const AnswerRecord& record = *it->second;
    const double s = score_answer(record.predicted, instance.gold_answers, mode);
    ++report.total;
    report.correct += s;
    if (record.used_fallback) ++report.fallback_count;
    GroupStats& type = report.by_question_type[instance.question_type.value_or(kUntagged)];
    ++type.count;
    type.correct += s;
    GroupStats& images = report.by_num_images[instance.num_images()];
    ++images.count;
    images.correct += s;
  }
  return report;
}

std::vector<BreakdownRow> breakdown(const EvalReport& report, const std::string& key) {
  std::vector<BreakdownRow> rows;
  if (key == "question_type") {
    for (const auto& [group, stats] : report.by_question_type) {
      if (stats.count > 0) rows.push_back({group, stats.count, stats.accuracy()});
    }
  } else if (key == "num_images") {
    for (const auto& [n, stats] : report.by_num_images) {
      if (stats.count > 0) rows.push_back({std::to_string(n), stats.count, stats.accuracy()});
    }
  } else {
    throw UnknownKey("unknown breakdown key '" + key + "' (question_type, num_images)");
  }
  return rows;
}

std::string format_breakdown(const std::string& title, const std::vector<BreakdownRow>& rows) {
  std::size_t width = title.size();
  for (const auto& r : rows) width = std::max(width, r.group.size());
  std::ostringstream out;
  char buf[64];
  out << title << std::string(width - title.size(), ' ') << "  count  accuracy\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "  %5zu  %7.1f%%\n", r.count, 100.0 * r.accuracy);
    out << r.group << std::string(width - r.group.size(), ' ') << buf;
  }
  return out.str();
}

namespace {

nlohmann::json group_json(const GroupStats& g) {
  return {{"count", g.count}, {"correct", g.correct}, {"accuracy", g.accuracy()}};
}

}  // namespace

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [group, stats] : report.by_question_type) types[group] = group_json(stats);
  // Array keeps numeric order; object keys would sort "10" before "2".
  nlohmann::json images = nlohmann::json::array();
  for (const auto& [n, stats] : report.by_num_images) {
    nlohmann::json row = group_json(stats);
    row["num_images"] = n;
    images.push_back(std::move(row));
  }
  return {{"score_mode", to_string(report.score_mode)},
          {"total", report.total},
          {"correct", report.correct},
          {"accuracy", report.accuracy()},
          {"fallback_count", report.fallback_count},
          {"fallback_rate", report.fallback_rate()},
          {"by_question_type", types},
          {"by_num_images", images},
          {"partial", report.partial}};
}

}  // namespace codevqa::harness
