#pragma once

#include <string>

#include "codevqa/lang/ast.hpp"
#include "json.hpp"

namespace codevqa::lang {

// Indented one-node-per-line rendering used by `codevqa parse`.
std::string dump_text(const Program& program);
nlohmann::json dump_json(const Program& program);

}  // namespace codevqa::lang
