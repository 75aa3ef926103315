#include "codevqa/cli/run_config.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "codevqa/backends/cached_backend.hpp"
#include "codevqa/core/error.hpp"
#include "codevqa/core/text.hpp"
#include "json.hpp"

namespace codevqa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Everything before an unquoted '#'.
std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted && c == '\\') {
      ++i;
    } else if (c == '"') {
      quoted = !quoted;
    } else if (c == '#' && !quoted) {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

bool is_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

class Fields {
 public:
  explicit Fields(std::map<std::string, json> values) : values_(std::move(values)) {}

  bool has(const std::string& field) const { return values_.contains(field); }

  const json* find(const std::string& field) {
    auto it = values_.find(field);
    if (it == values_.end()) return nullptr;
    used_.insert(field);
    return &it->second;
  }

  void string(const std::string& field, std::string& out) {
    if (const json* v = find(field)) {
      if (!v->is_string()) throw ConfigError(field, "expected a string");
      out = v->get<std::string>();
    }
  }

  void integer(const std::string& field, int& out) {
    if (const json* v = find(field)) {
      if (!v->is_number_integer()) throw ConfigError(field, "expected an integer");
      const auto n = v->get<std::int64_t>();
      if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
        throw ConfigError(field, "out of range");
      }
      out = static_cast<int>(n);
    }
  }

  void integer64(const std::string& field, std::int64_t& out) {
    if (const json* v = find(field)) {
      if (!v->is_number_integer()) throw ConfigError(field, "expected an integer");
      out = v->get<std::int64_t>();
    }
  }

  void unsigned64(const std::string& field, std::uint64_t& out) {
    if (const json* v = find(field)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
        throw ConfigError(field, "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void number(const std::string& field, double& out) {
    if (const json* v = find(field)) {
      if (!v->is_number()) throw ConfigError(field, "expected a number");
      out = v->get<double>();
    }
  }

  void strings(const std::string& field, std::vector<std::string>& out) {
    if (const json* v = find(field)) {
      if (!v->is_array()) throw ConfigError(field, "expected an array of strings");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_string()) throw ConfigError(field, "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  template <typename Enum, typename Convert>
  void choice(const std::string& field, Enum& out, Convert convert) {
    std::string text;
    if (!has(field)) return;
    string(field, text);
    try {
      out = convert(text);
    } catch (const ConfigError& e) {
      throw ConfigError(field, e.what());
    }
  }

  void reject_unused() const {
    for (const auto& [field, value] : values_) {
      if (!used_.contains(field)) throw ConfigError(field, "unknown setting");
    }
  }

 private:
  std::map<std::string, json> values_;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& base_dir, const std::string& text) {
  if (text.empty()) return {};
  return fs::absolute(base_dir / fs::path(text)).lexically_normal();
}

std::string resolve_spec(const fs::path& base_dir, const std::string& spec, const std::string& field) {
  if (spec.empty()) throw ConfigError(field, "no backend configured");
  for (const char* kind : {"oracle:", "scripted:"}) {
    if (spec.starts_with(kind)) {
      const std::string rest = spec.substr(std::string_view(kind).size());
      if (rest.empty()) throw ConfigError(field, "backend spec '" + spec + "' is missing its file");
      return kind + resolve(base_dir, rest).string();
    }
  }
  if (spec == "hashing" || spec.starts_with("hashing:") || spec.starts_with("http://") ||
      spec.starts_with("https://")) {
    return spec;
  }
  throw ConfigError(field, "unknown backend spec '" + spec + "' (oracle:, scripted:, hashing, http://)");
}

// "${NAME}" -> NAME.
std::optional<std::string> env_reference(const std::string& text) {
  if (text.size() < 4 || !text.starts_with("${") || text.back() != '}') return std::nullopt;
  std::string name = text.substr(2, text.size() - 3);
  if (!is_key(name)) return std::nullopt;
  return name;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  std::map<std::string, json> values;
  std::string section;
  std::size_t line_no = 0;
  for (const std::string& raw : split_lines(text)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    const std::string where = "line " + std::to_string(line_no);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || !is_key(trim(line.substr(1, line.size() - 2)))) {
        throw ConfigError(where, "malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!is_key(key)) throw ConfigError(where, "malformed key '" + key + "'");
    const std::string field = section.empty() ? key : section + "." + key;
    json value;
    try {
      value = json::parse(trim(line.substr(eq + 1)));
    } catch (const json::exception&) {
      throw ConfigError(field, "value is not valid (strings need double quotes)");
    }
    if (value.is_string() && value.get<std::string>().find("${") != std::string::npos && field != "backend.api_key") {
      throw ConfigError(field, "environment interpolation is only allowed for backend.api_key");
    }
    if (!values.emplace(field, std::move(value)).second) throw ConfigError(field, "set twice");
  }

  Fields f(std::move(values));
  RunConfig c;
  DatasetFlavor flavor = DatasetFlavor::kSingleImage;
  f.choice("engine.flavor", flavor, flavor_from_string);
  c.engine = flavor == DatasetFlavor::kSingleImage ? EngineConfig::single_image() : EngineConfig::multi_image();

  EngineConfig& e = c.engine;
  f.integer("engine.num_code_shots", e.num_code_shots);
  f.integer("engine.num_qa_shots", e.num_qa_shots);
  f.integer("engine.captions_per_image", e.captions_per_image);
  f.integer("engine.num_patch_samples", e.num_patch_samples);
  f.integer("engine.gradcam_layer", e.gradcam_layer);
  f.integer("engine.max_caption_rounds", e.max_caption_rounds);
  f.number("engine.detection_threshold", e.detection_threshold);
  f.strings("engine.knowledge_bias_tokens", e.knowledge_bias_tokens);
  f.number("engine.knowledge_bias_value", e.knowledge_bias_value);
  f.strings("engine.extra_primitives", e.extra_primitives);
  f.integer("engine.max_program_tokens", e.max_program_tokens);
  f.integer("engine.max_answer_tokens", e.max_answer_tokens);
  f.integer("engine.max_prompt_tokens", e.max_prompt_tokens);
  f.choice("engine.example_order", e.example_order, example_order_from_string);
  f.choice("engine.retrieval", e.retrieval, retrieval_mode_from_string);
  f.unsigned64("engine.seed", e.rng_seed);
  f.string("engine.code_model", e.code_model);
  f.string("engine.qa_model", e.qa_model);

  f.number("frame.left", e.frame.left);
  f.number("frame.bottom", e.frame.bottom);
  f.number("frame.right", e.frame.right);
  f.number("frame.top", e.frame.top);
  f.integer("frame.grid_w", e.frame.grid_w);
  f.integer("frame.grid_h", e.frame.grid_h);

  f.integer64("limits.max_steps", e.limits.max_steps);
  f.integer64("limits.max_loop_iterations", e.limits.max_loop_iterations);
  f.integer64("limits.max_primitive_calls", e.limits.max_primitive_calls);

  std::string path;
  f.string("dataset.path", path);
  c.dataset_path = resolve(base_dir, path);
  f.choice("dataset.format", c.dataset_format, harness::dataset_format_from_string);

  path.clear();
  f.string("store.path", path);
  c.store_path = resolve(base_dir, path);
  path.clear();
  f.string("store.preamble", path);
  c.preamble_path = resolve(base_dir, path);

  BackendConfig& b = c.backends;
  for (auto [field, target] : {std::pair{"backend.code_lm", &b.code_lm}, std::pair{"backend.qa_lm", &b.qa_lm},
                               std::pair{"backend.vision", &b.vision}, std::pair{"backend.embedder", &b.embedder}}) {
    std::string spec;
    f.string(field, spec);
    *target = resolve_spec(base_dir, spec, field);
  }
  if (f.has("backend.api_key")) {
    std::string key;
    f.string("backend.api_key", key);
    const auto name = env_reference(key);
    if (!name) throw ConfigError("backend.api_key", "must name an environment variable as \"${NAME}\"");
    b.api_key_env = *name;
  }
  path.clear();
  f.string("backend.cache_dir", path);
  b.cache_dir = resolve(base_dir, path);
  f.integer("backend.timeout_ms", b.timeout_ms);
  f.integer("backend.max_attempts", b.max_attempts);
  f.integer("backend.max_in_flight", b.max_in_flight);
  if (b.timeout_ms <= 0) throw ConfigError("backend.timeout_ms", "must be positive");
  if (b.max_attempts <= 0) throw ConfigError("backend.max_attempts", "must be positive");
  if (b.max_in_flight <= 0) throw ConfigError("backend.max_in_flight", "must be positive");

  path.clear();
  f.string("run.output", path);
  if (!path.empty()) c.output_dir = path;
  c.output_dir = resolve(base_dir, c.output_dir.string());
  int workers = 1;
  f.integer("run.workers", workers);
  if (workers <= 0) throw ConfigError("run.workers", "must be positive");
  c.workers = static_cast<std::size_t>(workers);
  f.choice("run.mode", c.mode, harness::run_mode_from_string);
  f.choice("run.score_mode", c.score_mode, harness::score_mode_from_string);

  f.reject_unused();
  if (c.dataset_path.empty()) throw ConfigError("dataset.path", "is required");
  if (c.store_path.empty()) throw ConfigError("store.path", "is required");
  c.engine.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.parent_path());
}

std::string serialize_run_config(const RunConfig& c) {
  std::ostringstream out;
  auto put = [&](const char* key, const json& value) { out << key << " = " << value.dump() << "\n"; };
  const EngineConfig& e = c.engine;
  out << "[engine]\n";
  put("flavor", to_string(e.flavor));
  put("num_code_shots", e.num_code_shots);
  put("num_qa_shots", e.num_qa_shots);
  put("captions_per_image", e.captions_per_image);
  put("num_patch_samples", e.num_patch_samples);
  put("gradcam_layer", e.gradcam_layer);
  put("max_caption_rounds", e.max_caption_rounds);
  put("detection_threshold", e.detection_threshold);
  put("knowledge_bias_tokens", e.knowledge_bias_tokens);
  put("knowledge_bias_value", e.knowledge_bias_value);
  put("extra_primitives", e.extra_primitives);
  put("max_program_tokens", e.max_program_tokens);
  put("max_answer_tokens", e.max_answer_tokens);
  put("max_prompt_tokens", e.max_prompt_tokens);
  put("example_order", to_string(e.example_order));
  put("retrieval", to_string(e.retrieval));
  put("seed", e.rng_seed);
  put("code_model", e.code_model);
  put("qa_model", e.qa_model);
  out << "\n[frame]\n";
  put("left", e.frame.left);
  put("bottom", e.frame.bottom);
  put("right", e.frame.right);
  put("top", e.frame.top);
  put("grid_w", e.frame.grid_w);
  put("grid_h", e.frame.grid_h);
  out << "\n[limits]\n";
  put("max_steps", e.limits.max_steps);
  put("max_loop_iterations", e.limits.max_loop_iterations);
  put("max_primitive_calls", e.limits.max_primitive_calls);
  out << "\n[dataset]\n";
  put("path", c.dataset_path.string());
  put("format", harness::to_string(c.dataset_format));
  out << "\n[store]\n";
  put("path", c.store_path.string());
  put("preamble", c.preamble_path.string());
  out << "\n[backend]\n";
  put("code_lm", c.backends.code_lm);
  put("qa_lm", c.backends.qa_lm);
  put("vision", c.backends.vision);
  put("embedder", c.backends.embedder);
  put("api_key", "${" + c.backends.api_key_env + "}");
  put("cache_dir", c.backends.cache_dir.string());
  put("timeout_ms", c.backends.timeout_ms);
  put("max_attempts", c.backends.max_attempts);
  put("max_in_flight", c.backends.max_in_flight);
  out << "\n[run]\n";
  put("output", c.output_dir.string());
  put("workers", c.workers);
  put("mode", harness::to_string(c.mode));
  put("score_mode", harness::to_string(c.score_mode));
  return out.str();
}

std::string config_hash(const RunConfig& config) { return backends::sha256_hex(serialize_run_config(config)); }

void validate_run_config(const RunConfig& c) {
  auto must_exist = [](const fs::path& p, const std::string& field) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError(field, "no such file: " + p.string());
  };
  must_exist(c.dataset_path, "dataset.path");
  must_exist(c.store_path, "store.path");
  must_exist(c.preamble_path, "store.preamble");
  for (auto [field, spec] : {std::pair{"backend.code_lm", &c.backends.code_lm},
                             std::pair{"backend.qa_lm", &c.backends.qa_lm},
                             std::pair{"backend.vision", &c.backends.vision},
                             std::pair{"backend.embedder", &c.backends.embedder}}) {
    for (const char* kind : {"oracle:", "scripted:"}) {
      if (spec->starts_with(kind)) must_exist(spec->substr(std::string_view(kind).size()), field);
    }
  }
  c.engine.validate();
}

}  // namespace codevqa::cli
