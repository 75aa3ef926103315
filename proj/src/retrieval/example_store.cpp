#include "codevqa/retrieval/example_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "codevqa/core/random.hpp"

namespace codevqa::retrieval {

using nlohmann::json;

std::string to_string(ExampleKind kind) { return kind == ExampleKind::kCode ? "code" : "qa"; }

json to_json(const Example& e) {
  json j = {{"id", e.id}, {"question", e.question}, {"kind", to_string(e.kind)}};
  if (e.kind == ExampleKind::kCode) {
    j["program"] = e.program;
  } else {
    j["captions"] = e.captions;
    j["answer"] = e.answer;
  }
  j["embedding"] = e.embedding;
  return j;
}

Example example_from_json(const json& j) {
  Example e;
  e.id = j.at("id").get<std::string>();
  e.question = j.at("question").get<std::string>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "code") {
    e.kind = ExampleKind::kCode;
    e.program = j.at("program").get<std::string>();
  } else if (kind == "qa") {
    e.kind = ExampleKind::kQa;
    e.captions = j.at("captions").get<std::vector<std::vector<std::string>>>();
    e.answer = j.at("answer").get<std::string>();
  } else {
    throw Error("unknown example kind '" + kind + "'");
  }
  e.embedding = j.at("embedding").get<std::vector<double>>();
  return e;
}

ExampleStore::ExampleStore(std::vector<Example> examples, const lang::ParseOptions& grammar)
    : examples_(std::move(examples)) {
  if (examples_.empty()) throw Error("example store is empty");
  dimension_ = examples_.front().embedding.size();
  if (dimension_ == 0) throw DimensionMismatch("example '" + examples_.front().id + "' has an empty embedding");
  for (const Example& e : examples_) {
    if (e.embedding.size() != dimension_) {
      throw DimensionMismatch("example '" + e.id + "' has dimension " + std::to_string(e.embedding.size()) +
                              ", store has " + std::to_string(dimension_));
    }
    if (e.kind == ExampleKind::kCode) {
      try {
        lang::parse_source(e.program, grammar);
      } catch (const Error& err) {
        throw Error("example '" + e.id + "' program does not parse: " + err.what());
      }
    }
  }
}

std::size_t ExampleStore::count(ExampleKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(examples_.begin(), examples_.end(), [&](const Example& e) { return e.kind == kind; }));
}

ExampleStore load_store(const std::filesystem::path& path, const lang::ParseOptions& grammar) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open example store " + path.string());
  std::vector<Example> examples;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      examples.push_back(example_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError(path.string(), number, e.what());
    }
  }
  return ExampleStore(std::move(examples), grammar);
}

void save_store(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write example store " + path.string());
  for (const Example& e : examples) out << to_json(e).dump() << "\n";
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine of vectors with dimensions " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::vector<std::size_t> indices_of(const ExampleStore& store, ExampleKind kind, std::size_t k) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (store.examples()[i].kind == kind) out.push_back(i);
  }
  if (k < 1 || k > out.size()) {
    throw InsufficientExamples("requested " + std::to_string(k) + " " + to_string(kind) + " examples, store has " +
                               std::to_string(out.size()));
  }
  return out;
}

}  // namespace

std::vector<const Example*> top_k(std::span<const double> query, const ExampleStore& store, std::size_t k,
                                  ExampleKind kind) {
  if (query.size() != store.dimension()) {
    throw DimensionMismatch("query has dimension " + std::to_string(query.size()) + ", store has " +
                            std::to_string(store.dimension()));
  }
  const std::vector<std::size_t> pool = indices_of(store, kind, k);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(pool.size());
  for (std::size_t i : pool) scored.emplace_back(cosine(query, store.examples()[i].embedding), i);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<const Example*> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back(&store.examples()[scored[r].second]);
  return out;
}

std::vector<const Example*> random_k(const ExampleStore& store, std::size_t k, ExampleKind kind,
                                     std::mt19937_64& rng) {
  std::vector<std::size_t> pool = indices_of(store, kind, k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  std::vector<const Example*> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(&store.examples()[pool[i]]);
  return out;
}

}  // namespace codevqa::retrieval
