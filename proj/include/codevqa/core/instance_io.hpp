#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "codevqa/core/types.hpp"
#include "json.hpp"

namespace codevqa {

nlohmann::json to_json(const VQAInstance& instance);
// Throws codevqa::Error on missing or mistyped fields.
VQAInstance instance_from_json(const nlohmann::json& object);

// Normalized instance JSONL: one object per line, LF endings.
void write_instances_jsonl(std::ostream& out, const std::vector<VQAInstance>& instances);
std::vector<VQAInstance> read_instances_jsonl(std::istream& in, const std::string& source_name);

}  // namespace codevqa
