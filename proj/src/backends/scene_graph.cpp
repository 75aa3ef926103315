#include "codevqa/backends/scene_graph.hpp"

#include <algorithm>
#include <fstream>

#include "codevqa/core/error.hpp"

namespace codevqa::backends {

using nlohmann::json;

bool SceneObject::has_attribute(std::string_view attribute) const {
  return std::find(attributes.begin(), attributes.end(), attribute) != attributes.end();
}

void SceneGraph::validate(int grid_h, int grid_w) const {
  if (image_ref.empty()) throw Error("scene has an empty image_ref");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const SceneObject& o = objects[i];
    if (o.name.empty()) throw Error(image_ref + ": object " + std::to_string(i) + " has no name");
    if (o.row < 0 || o.row >= grid_h || o.col < 0 || o.col >= grid_w) {
      throw Error(image_ref + ": object '" + o.name + "' sits outside the " + std::to_string(grid_h) + "x" +
                  std::to_string(grid_w) + " grid");
    }
    for (const auto& r : o.relations) {
      if (r.target >= objects.size()) {
        throw Error(image_ref + ": relation '" + r.predicate + "' targets missing object " + std::to_string(r.target));
      }
    }
  }
}

json to_json(const SceneGraph& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) {
    json relations = json::array();
    for (const auto& r : o.relations) relations.push_back({{"predicate", r.predicate}, {"target", r.target}});
    objects.push_back({{"name", o.name},
                       {"attributes", o.attributes},
                       {"grid_cell", {o.row, o.col}},
                       {"relations", relations},
                       {"detect_score", o.detect_score}});
  }
  return {{"image_ref", scene.image_ref}, {"objects", objects}};
}

SceneGraph scene_from_json(const json& object) {
  try {
    SceneGraph scene;
    scene.image_ref = object.at("image_ref").get<std::string>();
    for (const json& o : object.at("objects")) {
      SceneObject so;
      so.name = o.at("name").get<std::string>();
      so.attributes = o.value("attributes", std::vector<std::string>{});
      const json& cell = o.at("grid_cell");
      if (!cell.is_array() || cell.size() != 2) throw Error("grid_cell must be [row, col]");
      so.row = cell[0].get<int>();
      so.col = cell[1].get<int>();
      if (o.contains("relations")) {
        for (const json& r : o["relations"]) {
          so.relations.push_back({r.at("predicate").get<std::string>(), r.at("target").get<std::size_t>()});
        }
      }
      so.detect_score = o.value("detect_score", 0.9);
      scene.objects.push_back(std::move(so));
    }
    return scene;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed scene: ") + e.what());
  }
}

SceneLibrary load_scenes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  const json& list = doc.is_object() && doc.contains("scenes") ? doc["scenes"] : doc;
  if (!list.is_array()) throw Error(path.string() + ": expected an array of scenes");
  SceneLibrary library;
  for (const json& s : list) {
    SceneGraph scene = scene_from_json(s);
    const std::string ref = scene.image_ref;
    if (!library.emplace(ref, std::move(scene)).second) throw Error(path.string() + ": duplicate scene " + ref);
  }
  return library;
}

void save_scenes(const std::filesystem::path& path, const SceneLibrary& scenes) {
  json list = json::array();
  for (const auto& [ref, scene] : scenes) list.push_back(to_json(scene));
  std::ofstream out(path);
  if (!out) throw Error("cannot write scene file " + path.string());
  out << json{{"scenes", list}}.dump(1) << "\n";
}

std::string plural_of(std::string_view noun) {
  static const std::map<std::string, std::string, std::less<>> irregular = {
      {"man", "men"}, {"woman", "women"}, {"person", "people"}, {"child", "children"},
      {"foot", "feet"}, {"mouse", "mice"}, {"sheep", "sheep"}, {"fish", "fish"}};
  if (auto it = irregular.find(noun); it != irregular.end()) return it->second;
  std::string n(noun);
  if (n.empty()) return n;
  const auto ends_with = [&](std::string_view s) { return n.size() >= s.size() && n.ends_with(s); };
  if (n.size() >= 2 && n.back() == 'y' && std::string_view("aeiou").find(n[n.size() - 2]) == std::string_view::npos) {
    return n.substr(0, n.size() - 1) + "ies";
  }
  if (ends_with("s") || ends_with("sh") || ends_with("ch") || ends_with("x") || ends_with("z")) return n + "es";
  return n + "s";
}

bool names_noun(std::string_view word, std::string_view noun) { return word == noun || word == plural_of(noun); }

const std::vector<std::string>& color_words() {
  static const std::vector<std::string> colors = {"red",   "blue",  "green", "yellow", "black", "white",
                                                  "brown", "pink",  "gray",  "orange", "purple", "silver"};
  return colors;
}

bool is_color(std::string_view word) {
  const auto& c = color_words();
  return std::find(c.begin(), c.end(), word) != c.end();
}

std::optional<int> parse_count_word(std::string_view word) {
  static const std::vector<std::string> names = {"zero", "one", "two",   "three", "four", "five",
                                                 "six",  "seven", "eight", "nine",  "ten"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (word == names[i]) return static_cast<int>(i);
  }
  if (word.empty() || word.size() > 6) return std::nullopt;
  int value = 0;
  for (char ch : word) {
    if (ch < '0' || ch > '9') return std::nullopt;
    value = value * 10 + (ch - '0');
  }
  return value;
}

NounPhrase parse_noun_phrase(const std::vector<std::string>& words) {
  NounPhrase phrase;
  if (words.empty()) return phrase;
  phrase.noun = words.back();
  phrase.attributes.assign(words.begin(), words.end() - 1);
  return phrase;
}

bool matches(const SceneObject& object, const NounPhrase& phrase) {
  if (!names_noun(phrase.noun, object.name)) return false;
  return std::all_of(phrase.attributes.begin(), phrase.attributes.end(),
                     [&](const std::string& a) { return object.has_attribute(a); });
}

std::vector<std::size_t> find_matches(const SceneGraph& scene, const NounPhrase& phrase) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (matches(scene.objects[i], phrase)) out.push_back(i);
  }
  return out;
}

}  // namespace codevqa::backends
