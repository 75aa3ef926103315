#include "codevqa/backends/oracle_backend.hpp"

#include <algorithm>
#include <set>

#include "codevqa/backends/hashing_embedder.hpp"
#include "codevqa/core/text.hpp"

namespace codevqa::backends {

namespace {

using WordList = std::vector<std::string>;

bool starts_with(const WordList& w, std::initializer_list<std::string_view> prefix) {
  if (w.size() < prefix.size()) return false;
  std::size_t i = 0;
  for (std::string_view p : prefix) {
    if (w[i++] != p) return false;
  }
  return true;
}

WordList slice(const WordList& w, std::size_t from, std::size_t to) {
  to = std::min(to, w.size());
  if (from >= to) return {};
  return WordList(w.begin() + static_cast<std::ptrdiff_t>(from), w.begin() + static_cast<std::ptrdiff_t>(to));
}

WordList drop_article(WordList w) {
  static const std::set<std::string> articles = {"a", "an", "the", "any", "some"};
  while (!w.empty() && articles.contains(w.front())) w.erase(w.begin());
  return w;
}

NounPhrase phrase_of(const WordList& w, const std::string& question) {
  WordList stripped = drop_article(w);
  if (stripped.empty()) throw UnsupportedTemplate("no object named in '" + question + "'");
  return parse_noun_phrase(stripped);
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

std::size_t count_of(const SceneGraph& scene, const NounPhrase& phrase) { return find_matches(scene, phrase).size(); }

// "exactly 2 pink shoes" / "a dog" / "dogs" -> predicate over one scene.
bool scene_satisfies(const SceneGraph& scene, const WordList& rest, const std::string& question) {
  if (!rest.empty() && rest.front() == "exactly") {
    if (rest.size() < 3) throw UnsupportedTemplate("incomplete count in '" + question + "'");
    const auto n = parse_count_word(rest[1]);
    if (!n) throw UnsupportedTemplate("unreadable count '" + rest[1] + "'");
    return count_of(scene, phrase_of(slice(rest, 2, rest.size()), question)) == static_cast<std::size_t>(*n);
  }
  return count_of(scene, phrase_of(rest, question)) > 0;
}

std::optional<std::size_t> find_word(const WordList& w, std::string_view word, std::size_t from = 0) {
  for (std::size_t i = from; i < w.size(); ++i) {
    if (w[i] == word) return i;
  }
  return std::nullopt;
}

std::string spatial_answer(const SceneGraph& scene, const WordList& w, const std::string& question) {
  // w = is the X [to the] (left|right) of the Y | is the X (above|below) the Y
  std::size_t rel = 0;
  std::string kind;
  for (std::size_t i = 2; i < w.size(); ++i) {
    if ((w[i] == "left" || w[i] == "right") && i + 1 < w.size() && w[i + 1] == "of") {
      rel = i;
      kind = w[i];
      break;
    }
    if (w[i] == "above" || w[i] == "below") {
      rel = i;
      kind = w[i];
      break;
    }
  }
  WordList x = slice(w, 2, rel);
  while (!x.empty() && (x.back() == "to" || x.back() == "the")) x.pop_back();
  const std::size_t y_from = (kind == "left" || kind == "right") ? rel + 2 : rel + 1;
  const NounPhrase xp = phrase_of(x, question);
  const NounPhrase yp = phrase_of(slice(w, y_from, w.size()), question);
  const auto xs = find_matches(scene, xp);
  const auto ys = find_matches(scene, yp);
  if (xs.empty() || ys.empty()) return "no";
  const SceneObject& a = scene.objects[xs.front()];
  const SceneObject& b = scene.objects[ys.front()];
  if (kind == "left") return yes_no(a.col < b.col);
  if (kind == "right") return yes_no(a.col > b.col);
  if (kind == "above") return yes_no(a.row < b.row);
  return yes_no(a.row > b.row);
}

bool is_spatial(const WordList& w) {
  for (std::size_t i = 2; i < w.size(); ++i) {
    if ((w[i] == "left" || w[i] == "right") && i + 1 < w.size() && w[i + 1] == "of") return true;
    if (w[i] == "above" || w[i] == "below") return true;
  }
  return false;
}

}  // namespace

std::string answer_from_scene(const SceneGraph& scene, const std::string& question) {
  const WordList w = words(question);

  if (starts_with(w, {"how", "many", "images"}) && w.size() > 4) return answer_from_scenes({&scene}, question);
  if (starts_with(w, {"is", "it", "true", "that"})) return answer_from_scenes({&scene}, question);
  if (starts_with(w, {"are", "there", "exactly"}) || starts_with(w, {"is", "there", "exactly"})) {
    return yes_no(scene_satisfies(scene, slice(w, 2, w.size()), question));
  }
  if (starts_with(w, {"how", "many"})) {
    static const std::set<std::string> stops = {"are", "is", "there", "in", "can", "do"};
    std::size_t end = 2;
    while (end < w.size() && !stops.contains(w[end])) ++end;
    return std::to_string(count_of(scene, phrase_of(slice(w, 2, end), question)));
  }
  if (starts_with(w, {"what", "color"}) && w.size() > 3 && (w[2] == "is" || w[2] == "are")) {
    const auto found = find_matches(scene, phrase_of(slice(w, 3, w.size()), question));
    if (found.empty()) throw UnsupportedTemplate("nothing to color in '" + question + "'");
    for (const auto& a : scene.objects[found.front()].attributes) {
      if (is_color(a)) return a;
    }
    return "unknown";
  }
  if (starts_with(w, {"is", "there"}) || starts_with(w, {"are", "there"})) {
    const WordList rest = slice(w, 2, w.size());
    if (const auto conj = find_word(rest, "and")) {
      const WordList lhs = slice(rest, 0, *conj);
      const WordList rhs = slice(rest, *conj + 1, rest.size());
      return yes_no(scene_satisfies(scene, drop_article(lhs), question) &&
                    scene_satisfies(scene, drop_article(rhs), question));
    }
    return yes_no(scene_satisfies(scene, drop_article(rest), question));
  }
  if (starts_with(w, {"is", "the"}) || starts_with(w, {"are", "the"})) {
    if (is_spatial(w)) return spatial_answer(scene, w, question);
    if (w.size() < 4) throw UnsupportedTemplate("no attribute in '" + question + "'");
    const auto found = find_matches(scene, phrase_of(slice(w, 2, w.size() - 1), question));
    if (found.empty()) return "no";
    return yes_no(scene.objects[found.front()].has_attribute(w.back()));
  }
  if (starts_with(w, {"does", "the"}) || starts_with(w, {"do", "the"})) {
    const auto look = find_word(w, "look");
    if (!look) throw UnsupportedTemplate("unsupported question '" + question + "'");
    const auto found = find_matches(scene, phrase_of(slice(w, 2, *look), question));
    if (found.empty()) return "no";
    const SceneObject& o = scene.objects[found.front()];
    for (std::size_t i = *look + 1; i < w.size(); ++i) {
      if (w[i] != "and" && !o.has_attribute(w[i])) return "no";
    }
    return "yes";
  }
  throw UnsupportedTemplate("unsupported question '" + question + "'");
}

std::string answer_from_scenes(const std::vector<const SceneGraph*>& scenes, const std::string& question) {
  if (scenes.empty()) throw UnsupportedTemplate("no scenes to answer '" + question + "' from");
  const WordList w = words(question);
  if (starts_with(w, {"how", "many", "images"}) && w.size() > 4) {
    const WordList rest = drop_article(slice(w, 4, w.size()));
    std::size_t count = 0;
    for (const SceneGraph* s : scenes) count += scene_satisfies(*s, rest, question) ? 1 : 0;
    return std::to_string(count);
  }
  if (starts_with(w, {"is", "it", "true", "that"})) {
    const WordList rest = slice(w, 4, w.size());
    if (starts_with(rest, {"at", "least", "one", "image", "contains"}) && rest.size() > 5) {
      const WordList target = drop_article(slice(rest, 5, rest.size()));
      bool any = false;
      for (const SceneGraph* s : scenes) any = any || scene_satisfies(*s, target, question);
      return yes_no(any);
    }
    if (starts_with(rest, {"there", "are", "more"})) {
      const auto than = find_word(rest, "than", 3);
      if (!than) throw UnsupportedTemplate("comparison without 'than' in '" + question + "'");
      const NounPhrase more = phrase_of(slice(rest, 3, *than), question);
      const NounPhrase fewer = phrase_of(slice(rest, *than + 1, rest.size()), question);
      std::size_t a = 0;
      std::size_t b = 0;
      for (const SceneGraph* s : scenes) {
        a += count_of(*s, more);
        b += count_of(*s, fewer);
      }
      return yes_no(a > b);
    }
    if (starts_with(rest, {"there", "is"}) || starts_with(rest, {"there", "are"})) {
      // "there are two dogs" reads as "are there exactly two dogs" on one image.
      WordList target = drop_article(slice(rest, 2, rest.size()));
      if (!target.empty() && parse_count_word(target.front())) target.insert(target.begin(), "exactly");
      return yes_no(scene_satisfies(*scenes.front(), target, question));
    }
    throw UnsupportedTemplate("unsupported statement '" + question + "'");
  }
  return answer_from_scene(*scenes.front(), question);
}

std::string caption_prefix(const std::string& image_ref) { return "[" + image_ref + "] "; }

double overlap_score(const SceneGraph& scene, const std::string& text) {
  static const std::set<std::string> stopwords = {"a",  "an",   "the",  "of",    "is",     "are",   "there",
                                                  "to", "in",   "on",   "with",  "and",    "that",  "this",
                                                  "it", "image", "images", "picture", "photo", "its", "at"};
  std::set<std::string> vocab;
  for (const auto& o : scene.objects) {
    vocab.insert(o.name);
    vocab.insert(plural_of(o.name));
    vocab.insert(o.attributes.begin(), o.attributes.end());
    for (const auto& r : o.relations) {
      for (const auto& p : words(r.predicate)) vocab.insert(p);
    }
  }
  std::size_t total = 0;
  std::size_t hit = 0;
  for (const auto& word : words(text)) {
    if (stopwords.contains(word)) continue;
    ++total;
    if (vocab.contains(word)) ++hit;
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

OracleBackend::OracleBackend(SceneLibrary scenes, OracleOptions options)
    : scenes_(std::move(scenes)), options_(std::move(options)) {
  for (const auto& [ref, s] : scenes_) s.validate(options_.grid_h, options_.grid_w);
}

const SceneGraph& OracleBackend::scene(const std::string& image_ref) const {
  auto it = scenes_.find(image_ref);
  if (it == scenes_.end()) throw BackendError(BackendErrorKind::kRemote, "unknown image '" + image_ref + "'");
  return it->second;
}

CompleteResponse OracleBackend::complete(const CompleteRequest& request) {
  // Only the final block (after the last blank line) is the test question.
  const std::string& p = request.prompt;
  const std::size_t split = p.rfind("\n\n");
  const std::string block = split == std::string::npos ? p : p.substr(split + 2);

  std::string question;
  std::vector<std::string> refs;
  for (const std::string& line : split_lines(block)) {
    if (line.starts_with("Question: ")) question = trim(line.substr(10));
    if (line.starts_with("[")) {
      const std::size_t close = line.find(']');
      if (close != std::string::npos) {
        std::string ref = line.substr(1, close - 1);
        if (std::find(refs.begin(), refs.end(), ref) == refs.end()) refs.push_back(std::move(ref));
      }
    }
  }
  if (question.empty()) throw BackendError(BackendErrorKind::kRemote, "oracle found no question in the prompt");

  if (refs.empty()) {
    auto it = options_.knowledge.find(question);
    if (it == options_.knowledge.end()) {
      throw BackendError(BackendErrorKind::kRemote, "oracle has no knowledge answer for '" + question + "'");
    }
    return {it->second + "\n"};
  }
  std::vector<const SceneGraph*> scenes;
  for (const auto& ref : refs) scenes.push_back(&scene(ref));
  try {
    return {answer_from_scenes(scenes, question) + "\n"};
  } catch (const UnsupportedTemplate& e) {
    throw BackendError(BackendErrorKind::kRemote, e.what());
  }
}

AttentionResponse OracleBackend::attention(const AttentionRequest& request) {
  const SceneGraph& s = scene(request.image_ref);
  const std::size_t patches = static_cast<std::size_t>(options_.grid_w) * static_cast<std::size_t>(options_.grid_h);
  std::vector<std::string> tokens = {"[CLS]"};
  for (auto& w : words(request.text)) tokens.push_back(std::move(w));

  AttentionResponse out;
  out.tokens = tokens;
  out.special_positions = {0};
  out.attention = gradcam::Matrix(tokens.size(), patches, 1.0 / static_cast<double>(patches));
  out.gradient = gradcam::Matrix(tokens.size(), patches, -0.5);
  for (std::size_t j = 0; j < patches; ++j) out.gradient.at(0, j) = 1.0;

  for (std::size_t t = 1; t < tokens.size(); ++t) {
    for (const SceneObject& o : s.objects) {
      if (!names_noun(tokens[t], o.name) && !o.has_attribute(tokens[t])) continue;
      const std::size_t cell = static_cast<std::size_t>(o.row * options_.grid_w + o.col);
      out.attention.at(t, cell) = 1.0;
      out.gradient.at(t, cell) = 1.0;
    }
  }
  return out;
}

CaptionResponse OracleBackend::caption(const CaptionRequest& request) {
  const SceneGraph& s = scene(request.image_ref);
  // Objects under the sampled patches come first, most-sampled first.
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (-hits, index) sorted ascending
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const auto cell = static_cast<std::size_t>(s.objects[i].row * options_.grid_w + s.objects[i].col);
    const auto hits = static_cast<std::size_t>(std::count(request.patches.begin(), request.patches.end(), cell));
    order.emplace_back(request.patches.size() - hits, i);
  }
  std::sort(order.begin(), order.end());

  static const std::vector<std::string> templates = {
      "a photo of {}",       "there is {} in the picture", "{} can be seen",       "an image showing {}",
      "a close view of {}",  "{} in the scene",            "someone photographed {}", "a picture that contains {}"};
  std::vector<std::string> pool;
  for (const auto& tmpl : templates) {
    if (order.empty()) {
      pool.push_back(caption_prefix(s.image_ref) + tmpl.substr(0, tmpl.find("{}")) + "an empty scene" +
                     tmpl.substr(tmpl.find("{}") + 2));
      continue;
    }
    for (const auto& entry : order) {
      const SceneObject& o = s.objects[entry.second];
      std::string desc;
      for (const auto& a : o.attributes) desc += a + " ";
      desc += o.name;
      desc = (std::string_view("aeiou").find(desc.front()) != std::string_view::npos ? "an " : "a ") + desc;
      std::string text = tmpl;
      text.replace(text.find("{}"), 2, desc);
      pool.push_back(caption_prefix(s.image_ref) + text);
    }
  }
  CaptionResponse out;
  const std::size_t n = std::min(pool.size(), static_cast<std::size_t>(std::max(options_.captions_per_round, 1)));
  const std::size_t offset = static_cast<std::size_t>(request.seed % pool.size());
  for (std::size_t k = 0; k < n; ++k) out.captions.push_back(pool[(offset + k) % pool.size()]);
  return out;
}

ItcResponse OracleBackend::itc(const ItcRequest& request) { return {overlap_score(scene(request.image_ref), request.text)}; }

DetectResponse OracleBackend::detect(const DetectRequest& request) {
  const SceneGraph& s = scene(request.image_ref);
  const NounPhrase phrase = parse_noun_phrase(drop_article(words(request.text)));
  DetectResponse out;
  if (phrase.noun.empty()) return out;
  const double gw = options_.grid_w;
  const double gh = options_.grid_h;
  for (std::size_t i : find_matches(s, phrase)) {
    const SceneObject& o = s.objects[i];
    out.detections.push_back({o.name, o.col / gw, o.row / gh, (o.col + 1) / gw, (o.row + 1) / gh, o.detect_score});
  }
  return out;
}

EmbedResponse OracleBackend::embed(const EmbedRequest& request) {
  return {hashing_embedding(request.text, options_.embed_dim)};
}

Description OracleBackend::describe() {
  return Description{options_.grid_w, options_.grid_h, options_.embed_dim, "leading [CLS] at position 0"};
}

}  // namespace codevqa::backends
