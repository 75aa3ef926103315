#include "codevqa/harness/dataset.hpp"

#include <fstream>
#include <functional>

#include "codevqa/core/error.hpp"
#include "codevqa/core/instance_io.hpp"
#include "codevqa/core/text.hpp"
#include "json.hpp"

namespace codevqa::harness {

using nlohmann::json;

std::string to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kNormalized: return "normalized";
    case DatasetFormat::kGqa: return "gqa";
    case DatasetFormat::kCovr: return "covr";
    case DatasetFormat::kNlvr2: return "nlvr2";
  }
  return "?";
}

DatasetFormat dataset_format_from_string(const std::string& text) {
  for (auto f : {DatasetFormat::kNormalized, DatasetFormat::kGqa, DatasetFormat::kCovr, DatasetFormat::kNlvr2}) {
    if (to_string(f) == text) return f;
  }
  throw ConfigError("dataset.format", "unknown dataset format '" + text + "' (normalized, gqa, covr, nlvr2)");
}

namespace {

bool is_bool_label(const std::string& s) {
  const std::string l = to_lower(trim(s));
  return l == "true" || l == "false";
}

std::string label_text(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "True" : "False";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.get<std::string>();
}

void each_jsonl(const std::filesystem::path& path, const std::function<void(const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open dataset");
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(path.string(), number, e.what());
    } catch (const Error& e) {
      throw FormatError(path.string(), number, e.what());
    }
  }
}

VQAInstance statement_instance(std::string id, const std::string& text, const std::string& label,
                               std::vector<std::string> images, std::string dataset) {
  VQAInstance inst;
  inst.id = std::move(id);
  inst.is_statement = true;
  inst.text = statement_to_question(text);
  inst.gold_answers = {normalize_bool_answer(label)};
  inst.image_refs = std::move(images);
  inst.dataset = std::move(dataset);
  return inst;
}

std::vector<VQAInstance> load_gqa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open dataset");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string(), 0, e.what());
  }
  if (!doc.is_object()) throw FormatError(path.string(), 0, "GQA questions must be an object keyed by question id");
  std::vector<VQAInstance> out;
  for (const auto& [qid, q] : doc.items()) {
    try {
      VQAInstance inst;
      inst.id = qid;
      inst.text = q.at("question").get<std::string>();
      inst.image_refs = {q.at("imageId").get<std::string>()};
      inst.gold_answers = {normalize_bool_answer(label_text(q.at("answer")))};
      inst.dataset = "gqa";
      if (q.contains("question_type")) {
        inst.question_type = q["question_type"].get<std::string>();
      } else if (q.contains("types") && q["types"].contains("detailed")) {
        inst.question_type = q["types"]["detailed"].get<std::string>();
      }
      inst.validate();
      out.push_back(std::move(inst));
    } catch (const std::exception& e) {
      throw FormatError(path.string(), 0, "entry '" + qid + "': " + e.what());
    }
  }
  return out;
}

std::vector<VQAInstance> load_covr(const std::filesystem::path& path) {
  std::vector<VQAInstance> out;
  each_jsonl(path, [&](const json& r) {
    const std::string id = r.contains("qid") ? label_text(r["qid"]) : label_text(r.at("id"));
    const std::string text = r.contains("utterance") ? r["utterance"].get<std::string>() : r.at("question").get<std::string>();
    const std::string answer = label_text(r.at("answer"));
    const json& images = r.contains("scenes") ? r["scenes"] : r.at("image_ids");
    std::vector<std::string> refs;
    for (const json& i : images) refs.push_back(label_text(i));
    const bool statement = is_bool_label(answer) && !trim(text).ends_with("?");
    VQAInstance inst;
    if (statement) {
      inst = statement_instance(id, text, answer, refs, "covr");
    } else {
      inst.id = id;
      inst.text = text;
      inst.image_refs = refs;
      inst.gold_answers = {normalize_bool_answer(answer)};
      inst.dataset = "covr";
    }
    if (r.contains("pattern_name") && r["pattern_name"].is_string()) inst.question_type = r["pattern_name"].get<std::string>();
    inst.validate();
    out.push_back(std::move(inst));
  });
  return out;
}

std::vector<VQAInstance> load_nlvr2(const std::filesystem::path& path) {
  std::vector<VQAInstance> out;
  each_jsonl(path, [&](const json& r) {
    const std::string id = r.at("identifier").get<std::string>();
    std::vector<std::string> refs;
    if (r.contains("images")) {
      refs = r["images"].get<std::vector<std::string>>();
    } else {
      const std::size_t dash = id.rfind('-');
      if (dash == std::string::npos) throw Error("identifier '" + id + "' has no pair suffix");
      const std::string prefix = id.substr(0, dash);
      refs = {prefix + "-img0.png", prefix + "-img1.png"};
    }
    const std::string label = label_text(r.at("label"));
    if (!is_bool_label(label)) throw Error("label must be True or False, got '" + label + "'");
    out.push_back(statement_instance(id, r.at("sentence").get<std::string>(), label, refs, "nlvr2"));
    out.back().validate();
  });
  return out;
}

}  // namespace

std::vector<VQAInstance> load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kNormalized: {
      std::ifstream in(path);
      if (!in) throw FormatError(path.string(), 0, "cannot open dataset");
      return read_instances_jsonl(in, path.string());
    }
    case DatasetFormat::kGqa: return load_gqa(path);
    case DatasetFormat::kCovr: return load_covr(path);
    case DatasetFormat::kNlvr2: return load_nlvr2(path);
  }
  throw Error("unreachable dataset format");
}

}  // namespace codevqa::harness
