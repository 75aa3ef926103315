#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "codevqa/backends/backend.hpp"
#include "codevqa/core/types.hpp"
#include "codevqa/lang/interpreter.hpp"
#include "codevqa/prompting/prompts.hpp"
#include "codevqa/retrieval/example_store.hpp"

namespace codevqa::primitives {

// Thread-safe text -> embedding memo in front of the embedder backend.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::shared_ptr<backends::Backend> embedder) : embedder_(std::move(embedder)) {}

  std::vector<double> get(const std::string& text);

 private:
  std::shared_ptr<backends::Backend> embedder_;
  std::mutex lock_;
  std::map<std::string, std::vector<double>> memo_;
};

// Picks in-context examples of one kind for a question, already in prompt
// order. Shared by code-prompt and QA-prompt construction.
std::vector<const retrieval::Example*> select_examples(const retrieval::ExampleStore& store,
                                                       retrieval::ExampleKind kind, std::size_t k,
                                                       const std::string& question, const EngineConfig& config,
                                                       EmbeddingCache& embeddings, std::mt19937_64& rng);

// Everything the primitives did beyond their return values.
struct PrimitiveLog {
  std::vector<CaptionSet> captions;
  std::vector<std::string> qa_prompts;
  std::vector<std::string> notes;
};

// Per-execution implementation of the visual primitives. Owns its random
// stream and its caption cache, so two objects built with the same seed
// behave identically whatever else runs concurrently.
class VisualPrimitives : public lang::PrimitiveDispatcher {
 public:
  VisualPrimitives(const EngineConfig& config, backends::BackendSet backends, const retrieval::ExampleStore* qa_store,
                   EmbeddingCache& embeddings, std::mt19937_64 rng);

  std::string query(const lang::ImageHandle& image, const std::string& question) override;
  Position get_pos(const lang::ImageHandle& image, const std::string& text) override;
  lang::ImageHandle find_matching_image(const lang::ImageList& images, const std::string& text) override;
  lang::DetectionList find_object(const lang::ImageHandle& image, const std::string& description) override;
  std::string knowledge_query(const std::string& question) override;

  // The five-step procedure with the captions of every image in one QA prompt.
  // With a single image this is exactly query().
  std::string query_images(std::span<const lang::ImageHandle> images, const std::string& question);

  // Captions for one image (steps 1-4), computed once per image and reused.
  const CaptionSet& captions_for(const lang::ImageHandle& image, const std::string& question);

  const PrimitiveLog& log() const { return log_; }

 private:
  gradcam::CrossAttention cross_attention(const std::string& image_ref, const std::string& text);

  const EngineConfig& config_;
  backends::BackendSet backends_;
  const retrieval::ExampleStore* qa_store_;
  EmbeddingCache& embeddings_;
  std::mt19937_64 rng_;
  std::mutex cache_lock_;
  std::map<std::string, CaptionSet> caption_cache_;
  PrimitiveLog log_;
};

}  // namespace codevqa::primitives
