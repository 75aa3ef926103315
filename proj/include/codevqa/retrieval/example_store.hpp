#pragma once

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "codevqa/core/error.hpp"
#include "codevqa/lang/ast.hpp"
#include "json.hpp"

namespace codevqa::retrieval {

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InsufficientExamples : public Error {
 public:
  using Error::Error;
};

enum class ExampleKind { kCode, kQa };

std::string to_string(ExampleKind kind);

struct Example {
  std::string id;
  std::string question;
  ExampleKind kind = ExampleKind::kCode;
  // kCode
  std::string program;
  // kQa: captions per image, then the answer.
  std::vector<std::vector<std::string>> captions;
  std::string answer;
  std::vector<double> embedding;
  bool operator==(const Example&) const = default;
};

nlohmann::json to_json(const Example& example);
Example example_from_json(const nlohmann::json& object);

// Immutable after construction. Every embedding shares one dimension and every
// code example parses under the program grammar.
class ExampleStore {
 public:
  // Throws codevqa::Error on an empty store, ragged embeddings or an example
  // program the grammar rejects.
  explicit ExampleStore(std::vector<Example> examples, const lang::ParseOptions& grammar = {});

  const std::vector<Example>& examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  std::size_t dimension() const { return dimension_; }
  std::size_t count(ExampleKind kind) const;

 private:
  std::vector<Example> examples_;
  std::size_t dimension_ = 0;
};

// JSONL, one example per line. Errors carry the line number.
ExampleStore load_store(const std::filesystem::path& path, const lang::ParseOptions& grammar = {});
void save_store(const std::filesystem::path& path, const std::vector<Example>& examples);

// dot(a, b) / (|a| |b|); 0 when either side is the zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

// The k examples of `kind` most similar to the query, most similar first. Ties
// keep store order.
std::vector<const Example*> top_k(std::span<const double> query, const ExampleStore& store, std::size_t k,
                                  ExampleKind kind);

// k distinct examples of `kind`, uniformly without replacement (partial
// Fisher-Yates over store order).
std::vector<const Example*> random_k(const ExampleStore& store, std::size_t k, ExampleKind kind,
                                     std::mt19937_64& rng);

}  // namespace codevqa::retrieval
