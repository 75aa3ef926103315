#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace codevqa::backends {

struct SceneRelation {
  std::string predicate;
  std::size_t target = 0;
  bool operator==(const SceneRelation&) const = default;
};

struct SceneObject {
  std::string name;
  std::vector<std::string> attributes;
  int row = 0;
  int col = 0;
  std::vector<SceneRelation> relations;
  // Confidence the oracle detector reports for this object.
  double detect_score = 0.9;
  bool operator==(const SceneObject&) const = default;

  bool has_attribute(std::string_view attribute) const;
};

struct SceneGraph {
  std::string image_ref;
  std::vector<SceneObject> objects;
  bool operator==(const SceneGraph&) const = default;

  // Throws codevqa::Error when a cell leaves the grid or a relation target
  // does not exist.
  void validate(int grid_h, int grid_w) const;
};

nlohmann::json to_json(const SceneGraph& scene);
SceneGraph scene_from_json(const nlohmann::json& object);

using SceneLibrary = std::map<std::string, SceneGraph>;

// Accepts a JSON array of scenes or {"scenes": [...]}.
SceneLibrary load_scenes(const std::filesystem::path& path);
void save_scenes(const std::filesystem::path& path, const SceneLibrary& scenes);

// ---- Vocabulary shared by the oracle and the fixture generator -------------

// "shoe" -> "shoes", "lady" -> "ladies", "man" -> "men".
std::string plural_of(std::string_view noun);

// True when `word` is `noun` or its plural.
bool names_noun(std::string_view word, std::string_view noun);

const std::vector<std::string>& color_words();
bool is_color(std::string_view word);

// "two" -> 2, "3" -> 3; nullopt for anything else.
std::optional<int> parse_count_word(std::string_view word);

// A noun phrase like "small red chair": every word but the last is an
// attribute, the last names the object (singular or plural).
struct NounPhrase {
  std::vector<std::string> attributes;
  std::string noun;
  bool operator==(const NounPhrase&) const = default;
};

NounPhrase parse_noun_phrase(const std::vector<std::string>& words);
bool matches(const SceneObject& object, const NounPhrase& phrase);
std::vector<std::size_t> find_matches(const SceneGraph& scene, const NounPhrase& phrase);

}  // namespace codevqa::backends
