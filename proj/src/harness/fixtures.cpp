#include "codevqa/harness/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>

#include "codevqa/backends/hashing_embedder.hpp"
#include "codevqa/core/instance_io.hpp"
#include "codevqa/core/random.hpp"
#include "codevqa/core/text.hpp"

namespace codevqa::harness {

namespace {

using backends::SceneGraph;
using backends::SceneObject;
using backends::plural_of;
using Rng = std::mt19937_64;

// Generator streams, kept apart so growing one output never shifts another.
constexpr std::uint64_t kSceneStream = 11;
constexpr std::uint64_t kExampleStream = 12;
constexpr std::uint64_t kQaStream = 13;
constexpr std::uint64_t kCorruptStream = 14;

const std::vector<std::string>& nouns() {
  static const std::vector<std::string> list = {"chair", "cup",  "plate",  "dog",  "cat",  "horse",
                                                "bench", "shoe", "bottle", "lamp", "book", "bird"};
  return list;
}

const std::vector<std::string>& colors() {
  static const std::vector<std::string> list = {"red", "blue", "green", "yellow", "black", "white", "pink", "orange"};
  return list;
}

const std::string& pick(const std::vector<std::string>& list, Rng& rng) { return list[uniform_index(rng, list.size())]; }

bool coin(Rng& rng) { return uniform_index(rng, 2) == 0; }

std::string article(const std::string& word) {
  return std::string_view("aeiou").find(word.front()) != std::string_view::npos ? "an" : "a";
}

const std::string& color_of(const SceneObject& o) { return o.attributes.front(); }

std::size_t count_noun(const SceneGraph& s, const std::string& noun) {
  return static_cast<std::size_t>(
      std::count_if(s.objects.begin(), s.objects.end(), [&](const SceneObject& o) { return o.name == noun; }));
}

std::size_t count_phrase(const SceneGraph& s, const std::string& color, const std::string& noun) {
  return static_cast<std::size_t>(std::count_if(s.objects.begin(), s.objects.end(), [&](const SceneObject& o) {
    return o.name == noun && color_of(o) == color;
  }));
}

std::vector<const SceneObject*> unique_objects(const SceneGraph& s) {
  std::vector<const SceneObject*> out;
  for (const auto& o : s.objects) {
    if (count_noun(s, o.name) == 1) out.push_back(&o);
  }
  return out;
}

SceneGraph random_scene(const std::string& ref, Rng& rng, int grid) {
  SceneGraph s{ref, {}};
  const std::size_t n = 2 + uniform_index(rng, 5);
  std::set<std::pair<int, int>> used;
  for (std::size_t i = 0; i < n; ++i) {
    SceneObject o;
    // A small noun pool per scene makes repeated objects (and so counts
    // above one) common.
    o.name = nouns()[uniform_index(rng, 6) + (i % 2) * 6];
    o.attributes = {pick(colors(), rng)};
    do {
      o.row = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(grid)));
      o.col = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(grid)));
    } while (!used.emplace(o.row, o.col).second);
    s.objects.push_back(std::move(o));
  }
  return s;
}

struct Item {
  std::string text;
  bool statement = false;
  std::string program;
  std::string gold;
  std::string type;
};

const char* kOpenImage = "img = open_image(\"Image1.jpg\")\n";
const char* kOpenImages = "images = open_images(\"ImageSet1.jpg\")\n";

std::string yes_no_tail(const std::string& condition, const std::string& indent = "") {
  return indent + "if " + condition + ":\n" + indent + "    answer = \"yes\"\n" + indent + "else:\n" + indent +
         "    answer = \"no\"\n";
}

// ---- single-image templates ------------------------------------------------

std::optional<Item> existence(const SceneGraph& s, Rng& rng) {
  std::string color = pick(colors(), rng);
  std::string noun = pick(nouns(), rng);
  if (coin(rng)) {
    const SceneObject& o = s.objects[uniform_index(rng, s.objects.size())];
    color = color_of(o);
    noun = o.name;
  }
  Item item;
  item.type = "existence";
  item.text = "Is there " + article(color) + " " + color + " " + noun + "?";
  item.program = std::string(kOpenImage) + "matches = find_object(img, " + quote_string(color + " " + noun) + ")\n" +
                 yes_no_tail("len(matches) > 0");
  item.gold = count_phrase(s, color, noun) > 0 ? "yes" : "no";
  return item;
}

std::optional<Item> color_question(const SceneGraph& s, Rng& rng) {
  const auto candidates = unique_objects(s);
  if (candidates.empty()) return std::nullopt;
  const SceneObject& o = *candidates[uniform_index(rng, candidates.size())];
  Item item;
  item.type = "attribute";
  item.text = "What color is the " + o.name + "?";
  item.program = std::string(kOpenImage) + "color = query(img, " + quote_string(item.text) + ")\nanswer = color\n";
  item.gold = color_of(o);
  return item;
}

std::optional<Item> attribute(const SceneGraph& s, Rng& rng) {
  const auto candidates = unique_objects(s);
  if (candidates.empty()) return std::nullopt;
  const SceneObject& o = *candidates[uniform_index(rng, candidates.size())];
  const std::string color = coin(rng) ? color_of(o) : pick(colors(), rng);
  Item item;
  item.type = "attribute";
  item.text = "Is the " + o.name + " " + color + "?";
  item.program = std::string(kOpenImage) + "color = query(img, " + quote_string("What color is the " + o.name + "?") +
                 ")\n" + yes_no_tail("color == " + quote_string(color));
  item.gold = color_of(o) == color ? "yes" : "no";
  return item;
}

std::optional<Item> count(const SceneGraph& s, Rng& rng) {
  const std::string noun = coin(rng) ? s.objects[uniform_index(rng, s.objects.size())].name : pick(nouns(), rng);
  Item item;
  item.type = "count";
  item.text = "How many " + plural_of(noun) + " are there?";
  item.program = std::string(kOpenImage) + "found = find_object(img, " + quote_string(noun) + ")\nanswer = len(found)\n";
  item.gold = std::to_string(count_noun(s, noun));
  return item;
}

std::optional<Item> spatial(const SceneGraph& s, Rng& rng) {
  const auto candidates = unique_objects(s);
  if (candidates.size() < 2) return std::nullopt;
  const std::size_t i = uniform_index(rng, candidates.size());
  std::size_t j = uniform_index(rng, candidates.size() - 1);
  if (j >= i) ++j;
  const SceneObject& a = *candidates[i];
  const SceneObject& b = *candidates[j];
  static const std::vector<std::string> relations = {"left", "right", "above", "below"};
  const std::string& rel = pick(relations, rng);

  Item item;
  item.type = "spatial";
  std::string condition;
  bool truth = false;
  if (rel == "left" || rel == "right") {
    item.text = "Is the " + a.name + " to the " + rel + " of the " + b.name + "?";
    condition = rel == "left" ? "first_x < second_x" : "first_x > second_x";
    truth = rel == "left" ? a.col < b.col : a.col > b.col;
  } else {
    item.text = "Is the " + a.name + " " + rel + " the " + b.name + "?";
    // Frame y grows upwards while grid rows grow downwards.
    condition = rel == "above" ? "first_y > second_y" : "first_y < second_y";
    truth = rel == "above" ? a.row < b.row : a.row > b.row;
  }
  item.program = std::string(kOpenImage) + "first_x, first_y = get_pos(img, " + quote_string(a.name) + ")\n" +
                 "second_x, second_y = get_pos(img, " + quote_string(b.name) + ")\n" + yes_no_tail(condition);
  item.gold = truth ? "yes" : "no";
  return item;
}

std::optional<Item> conjunction(const SceneGraph& s, Rng& rng) {
  const std::string first = s.objects[uniform_index(rng, s.objects.size())].name;
  const std::string second = coin(rng) ? s.objects[uniform_index(rng, s.objects.size())].name : pick(nouns(), rng);
  if (first == second) return std::nullopt;
  Item item;
  item.type = "and";
  item.text = "Is there " + article(first) + " " + first + " and " + article(second) + " " + second + "?";
  item.program = std::string(kOpenImage) + "has_first = query(img, " +
                 quote_string("Is there " + article(first) + " " + first + "?") + ")\n" + "has_second = query(img, " +
                 quote_string("Is there " + article(second) + " " + second + "?") + ")\n" +
                 yes_no_tail("has_first == \"yes\" and has_second == \"yes\"");
  item.gold = count_noun(s, first) > 0 && count_noun(s, second) > 0 ? "yes" : "no";
  return item;
}

// ---- image-set templates -----------------------------------------------------

using Scenes = std::vector<const SceneGraph*>;

std::optional<Item> set_count(const Scenes& scenes, Rng& rng) {
  const SceneGraph& s = *scenes[uniform_index(rng, scenes.size())];
  const SceneObject& o = s.objects[uniform_index(rng, s.objects.size())];
  const std::size_t n = 1 + uniform_index(rng, 2);
  const std::string phrase = color_of(o) + " " + (n == 1 ? o.name : plural_of(o.name));
  const std::string probe = (n == 1 ? "Is there exactly 1 " : "Are there exactly 2 ") + phrase + "?";
  Item item;
  item.type = "set-count";
  item.text = "How many images contain exactly " + std::to_string(n) + " " + phrase + "?";
  item.program = std::string(kOpenImages) + "count = 0\nfor image in images:\n    matched = query(image, " +
                 quote_string(probe) + ")\n    if matched == \"yes\":\n        count += 1\nanswer = count\n";
  std::size_t gold = 0;
  for (const SceneGraph* g : scenes) gold += count_phrase(*g, color_of(o), o.name) == n ? 1 : 0;
  item.gold = std::to_string(gold);
  return item;
}

std::optional<Item> set_existence(const Scenes& scenes, Rng& rng) {
  std::string color = pick(colors(), rng);
  std::string noun = pick(nouns(), rng);
  if (coin(rng)) {
    const SceneGraph& s = *scenes[uniform_index(rng, scenes.size())];
    const SceneObject& o = s.objects[uniform_index(rng, s.objects.size())];
    color = color_of(o);
    noun = o.name;
  }
  Item item;
  item.type = "set-existence";
  item.statement = true;
  item.text = "At least one image contains " + article(color) + " " + color + " " + noun + ".";
  item.program = std::string(kOpenImages) + "found = 0\nfor image in images:\n    present = query(image, " +
                 quote_string("Is there " + article(color) + " " + color + " " + noun + "?") +
                 ")\n    if present == \"yes\":\n        found += 1\n" + yes_no_tail("found > 0");
  bool truth = false;
  for (const SceneGraph* g : scenes) truth = truth || count_phrase(*g, color, noun) > 0;
  item.gold = truth ? "yes" : "no";
  return item;
}

std::optional<Item> compare(const Scenes& scenes, Rng& rng) {
  const SceneGraph& s = *scenes[uniform_index(rng, scenes.size())];
  const std::string first = s.objects[uniform_index(rng, s.objects.size())].name;
  const std::string second = pick(nouns(), rng);
  if (first == second) return std::nullopt;
  Item item;
  item.type = "compare";
  item.statement = true;
  item.text = "There are more " + plural_of(first) + " than " + plural_of(second) + ".";
  item.program = std::string(kOpenImages) +
                 "first_total = 0\nsecond_total = 0\nfor image in images:\n"
                 "    first_total += int(query(image, " +
                 quote_string("How many " + plural_of(first) + " are there?") +
                 "))\n"
                 "    second_total += int(query(image, " +
                 quote_string("How many " + plural_of(second) + " are there?") + "))\n" +
                 yes_no_tail("first_total > second_total");
  std::size_t a = 0;
  std::size_t b = 0;
  for (const SceneGraph* g : scenes) {
    a += count_noun(*g, first);
    b += count_noun(*g, second);
  }
  item.gold = a > b ? "yes" : "no";
  return item;
}

std::optional<Item> matching(const Scenes& scenes, Rng& rng) {
  // The description names a noun found in one image only, so that image is
  // the unique best text match.
  const std::size_t t = uniform_index(rng, scenes.size());
  std::vector<const SceneObject*> exclusive;
  for (const auto& o : scenes[t]->objects) {
    bool elsewhere = false;
    for (std::size_t k = 0; k < scenes.size(); ++k) elsewhere = elsewhere || (k != t && count_noun(*scenes[k], o.name) > 0);
    if (!elsewhere) exclusive.push_back(&o);
  }
  if (exclusive.empty()) return std::nullopt;
  const SceneObject& o = *exclusive[uniform_index(rng, exclusive.size())];
  const std::string target = pick(nouns(), rng);
  const std::string description = color_of(o) + " " + o.name;
  Item item;
  item.type = "matching";
  item.text = "How many " + plural_of(target) + " are in the image with the " + description + "?";
  item.program = std::string(kOpenImages) + "image = find_matching_image(images, " + quote_string(description) +
                 ")\nanswer = int(query(image, " + quote_string("How many " + plural_of(target) + " are there?") +
                 "))\n";
  item.gold = std::to_string(count_noun(*scenes[t], target));
  return item;
}

using SingleTemplate = std::optional<Item> (*)(const SceneGraph&, Rng&);
using SetTemplate = std::optional<Item> (*)(const Scenes&, Rng&);

// Draws templates until one applies to the scenes. Existence and count
// always apply, so this terminates.
Item make_item(const Scenes& scenes, Rng& rng) {
  static const std::vector<SingleTemplate> single = {existence, color_question, attribute, count, spatial, conjunction};
  static const std::vector<SetTemplate> multi = {set_count, set_existence, compare, matching};
  for (;;) {
    std::optional<Item> item = scenes.size() == 1 ? single[uniform_index(rng, single.size())](*scenes.front(), rng)
                                                  : multi[uniform_index(rng, multi.size())](scenes, rng);
    if (item) return *item;
  }
}

std::string padded(std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, value);
  return buf;
}

std::vector<std::string> caption_lines(const SceneGraph& s) {
  std::vector<std::string> out;
  for (const auto& o : s.objects) {
    out.push_back("a photo of " + article(color_of(o)) + " " + color_of(o) + " " + o.name);
    if (out.size() == 3) break;
  }
  while (out.size() < 3) out.push_back("a plain background");
  return out;
}

}  // namespace

std::string corrupt_program(const std::string& program, std::size_t variant) {
  static const std::vector<std::string> tails = {
      "answer = int(\"two\")\n",
      "answer = undefined_total + 1\n",
      "answer = \"total: \" + 1\n",
      "answer = 1 / 0\n",
  };
  std::string out = program;
  if (!out.empty() && out.back() != '\n') out += '\n';
  return out + tails[variant % tails.size()];
}

EngineConfig fixture_engine_config(const FixtureOptions& options) {
  EngineConfig config = EngineConfig::multi_image();
  config.extra_primitives = {"find_object"};
  config.frame = CoordinateFrame{0.0, 0.0, static_cast<double>(options.grid), static_cast<double>(options.grid),
                                 options.grid, options.grid};
  config.rng_seed = options.seed;
  return config;
}

FixtureSet generate_fixtures(const FixtureOptions& options) {
  if (options.instances == 0) throw ConfigError("fixtures.n", "must be positive");
  if (!(options.corrupt_fraction >= 0.0 && options.corrupt_fraction <= 1.0)) {
    throw ConfigError("fixtures.corrupt_fraction", "must lie in [0, 1]");
  }
  FixtureSet set;
  set.script.default_program = true;

  Rng rng = seeded_stream(options.seed, kSceneStream);
  std::vector<std::string> programs;
  for (std::size_t i = 0; i < options.instances; ++i) {
    const std::size_t num_images = 1 + i % 5;
    VQAInstance instance;
    instance.id = "fx-" + padded(i, 3);
    instance.dataset = "fixtures";
    std::vector<SceneGraph> scenes;
    for (std::size_t k = 0; k < num_images; ++k) {
      const std::string ref = "fx-" + padded(i, 3) + "-img" + std::to_string(k) + ".jpg";
      scenes.push_back(random_scene(ref, rng, options.grid));
      instance.image_refs.push_back(ref);
    }
    Scenes view;
    for (const auto& s : scenes) view.push_back(&s);
    const Item item = make_item(view, rng);
    instance.text = item.statement ? statement_to_question(item.text) : item.text;
    instance.is_statement = item.statement;
    instance.gold_answers = {item.gold};
    instance.question_type = item.type;
    set.script.programs[instance.text] = item.program;
    for (auto& s : scenes) {
      std::string ref = s.image_ref;
      set.scenes.emplace(std::move(ref), std::move(s));
    }
    set.instances.push_back(std::move(instance));
  }

  const auto corrupt = static_cast<std::size_t>(std::llround(static_cast<double>(options.instances) * options.corrupt_fraction));
  if (corrupt > 0) {
    Rng pick_rng = seeded_stream(options.seed, kCorruptStream);
    std::vector<std::size_t> order(options.instances);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < corrupt; ++i) std::swap(order[i], order[i + uniform_index(pick_rng, order.size() - i)]);
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(corrupt));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t n = 0; n < chosen.size(); ++n) {
      const VQAInstance& instance = set.instances[chosen[n]];
      std::string& program = set.script.programs[instance.text];
      program = corrupt_program(program, n);
      set.corrupted.push_back(instance.id);
    }
  }

  Rng example_rng = seeded_stream(options.seed, kExampleStream);
  for (std::size_t e = 0; e < options.code_examples; ++e) {
    std::vector<SceneGraph> scenes;
    for (std::size_t k = 0; k < 1 + e % 5; ++k) scenes.push_back(random_scene("example", example_rng, options.grid));
    Scenes view;
    for (const auto& s : scenes) view.push_back(&s);
    const Item item = make_item(view, example_rng);
    retrieval::Example ex;
    ex.id = "code-" + padded(e, 3);
    ex.kind = retrieval::ExampleKind::kCode;
    ex.question = item.statement ? statement_to_question(item.text) : item.text;
    ex.program = item.program;
    ex.embedding = backends::hashing_embedding(ex.question, options.embed_dim);
    set.examples.push_back(std::move(ex));
  }

  Rng qa_rng = seeded_stream(options.seed, kQaStream);
  for (std::size_t e = 0; e < options.qa_examples; ++e) {
    const SceneGraph s = random_scene("example", qa_rng, options.grid);
    static const std::vector<SingleTemplate> simple = {existence, color_question, count};
    std::optional<Item> item;
    while (!item) item = simple[uniform_index(qa_rng, simple.size())](s, qa_rng);
    retrieval::Example ex;
    ex.id = "qa-" + padded(e, 3);
    ex.kind = retrieval::ExampleKind::kQa;
    ex.question = item->text;
    ex.captions = {caption_lines(s)};
    ex.answer = item->gold;
    ex.embedding = backends::hashing_embedding(ex.question, options.embed_dim);
    set.examples.push_back(std::move(ex));
  }
  return set;
}

void write_fixtures(const std::filesystem::path& dir, const FixtureSet& set, const FixtureOptions& options) {
  std::filesystem::create_directories(dir);
  backends::save_scenes(dir / "scenes.json", set.scenes);
  {
    std::ofstream out(dir / "instances.jsonl", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "instances.jsonl").string());
    write_instances_jsonl(out, set.instances);
  }
  backends::save_script(dir / "script.json", set.script);
  retrieval::save_store(dir / "store.jsonl", set.examples);
  const nlohmann::json summary = {{"seed", options.seed},
                                  {"instances", options.instances},
                                  {"corrupt_fraction", options.corrupt_fraction},
                                  {"corrupted", set.corrupted},
                                  {"code_examples", options.code_examples},
                                  {"qa_examples", options.qa_examples},
                                  {"embed_dim", options.embed_dim},
                                  {"grid", options.grid}};
  std::ofstream out(dir / "fixtures.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "fixtures.json").string());
  out << summary.dump(2) << "\n";
}

}  // namespace codevqa::harness
