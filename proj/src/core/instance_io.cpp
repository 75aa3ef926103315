#include "codevqa/core/instance_io.hpp"

#include <istream>
#include <ostream>

#include "codevqa/core/error.hpp"

namespace codevqa {

using nlohmann::json;

json to_json(const VQAInstance& instance) {
  json object = {
      {"id", instance.id},
      {"text", instance.text},
      {"is_statement", instance.is_statement},
      {"image_refs", instance.image_refs},
      {"gold_answers", instance.gold_answers},
      {"dataset", instance.dataset},
      {"question_type", nullptr},
  };
  if (instance.question_type) object["question_type"] = *instance.question_type;
  return object;
}

namespace {

template <typename T>
T required(const json& object, const char* field) {
  if (!object.contains(field)) throw Error(std::string("missing field '") + field + "'");
  try {
    return object.at(field).get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("field '") + field + "' has the wrong type");
  }
}

}  // namespace

VQAInstance instance_from_json(const json& object) {
  if (!object.is_object()) throw Error("instance must be a JSON object");
  VQAInstance instance;
  instance.id = required<std::string>(object, "id");
  instance.text = required<std::string>(object, "text");
  instance.is_statement = object.value("is_statement", false);
  instance.image_refs = required<std::vector<std::string>>(object, "image_refs");
  instance.gold_answers = required<std::vector<std::string>>(object, "gold_answers");
  instance.dataset = object.value("dataset", std::string());
  if (auto it = object.find("question_type"); it != object.end() && !it->is_null()) {
    if (!it->is_string()) throw Error("field 'question_type' has the wrong type");
    instance.question_type = it->get<std::string>();
  }
  instance.validate();
  return instance;
}

void write_instances_jsonl(std::ostream& out, const std::vector<VQAInstance>& instances) {
  for (const auto& instance : instances) out << to_json(instance).dump() << '\n';
}

std::vector<VQAInstance> read_instances_jsonl(std::istream& in, const std::string& source_name) {
  std::vector<VQAInstance> instances;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      instances.push_back(instance_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw FormatError(source_name, line_number, std::string("invalid JSON: ") + e.what());
    } catch (const Error& e) {
      throw FormatError(source_name, line_number, e.what());
    }
  }
  return instances;
}

}  // namespace codevqa
