#include "codevqa/primitives/visual_primitives.hpp"

#include <algorithm>

#include "codevqa/core/text.hpp"
#include "codevqa/gradcam/gradcam.hpp"

namespace codevqa::primitives {

std::vector<double> EmbeddingCache::get(const std::string& text) {
  {
    std::lock_guard guard(lock_);
    if (auto it = memo_.find(text); it != memo_.end()) return it->second;
  }
  // Computed outside the lock; a concurrent duplicate is harmless because the
  // embedder is deterministic.
  std::vector<double> v = embedder_->embed({text}).embedding;
  std::lock_guard guard(lock_);
  return memo_.emplace(text, std::move(v)).first->second;
}

std::vector<const retrieval::Example*> select_examples(const retrieval::ExampleStore& store,
                                                       retrieval::ExampleKind kind, std::size_t k,
                                                       const std::string& question, const EngineConfig& config,
                                                       EmbeddingCache& embeddings, std::mt19937_64& rng) {
  k = std::min(k, store.count(kind));
  if (k == 0) return {};
  std::vector<const retrieval::Example*> chosen;
  if (config.retrieval == RetrievalMode::kRandom) {
    chosen = retrieval::random_k(store, k, kind, rng);
  } else {
    chosen = retrieval::top_k(embeddings.get(question), store, k, kind);
  }
  if (config.example_order == ExampleOrder::kMostSimilarLast) std::reverse(chosen.begin(), chosen.end());
  return chosen;
}

VisualPrimitives::VisualPrimitives(const EngineConfig& config, backends::BackendSet backends,
                                   const retrieval::ExampleStore* qa_store, EmbeddingCache& embeddings,
                                   std::mt19937_64 rng)
    : config_(config), backends_(std::move(backends)), qa_store_(qa_store), embeddings_(embeddings), rng_(rng) {}

gradcam::CrossAttention VisualPrimitives::cross_attention(const std::string& image_ref, const std::string& text) {
  backends::AttentionResponse r = backends_.vision->attention({image_ref, text, config_.gradcam_layer});
  const std::size_t patches =
      static_cast<std::size_t>(config_.frame.grid_w) * static_cast<std::size_t>(config_.frame.grid_h);
  if (r.attention.cols != patches) {
    throw lang::PrimitiveError("attention covers " + std::to_string(r.attention.cols) + " patches, frame grid has " +
                               std::to_string(patches));
  }
  gradcam::CrossAttention ca{std::move(r.attention), std::move(r.gradient), std::move(r.tokens),
                             std::move(r.special_positions), config_.gradcam_layer};
  if (ca.token_texts.size() != ca.attention.rows) throw lang::PrimitiveError("attention rows do not match tokens");
  ca.validate();
  return ca;
}

const CaptionSet& VisualPrimitives::captions_for(const lang::ImageHandle& image, const std::string& question) {
  {
    std::lock_guard guard(cache_lock_);
    if (auto it = caption_cache_.find(image.ref); it != caption_cache_.end()) return it->second;
  }
  const gradcam::CrossAttention ca = cross_attention(image.ref, question);
  const std::vector<std::size_t> tokens = gradcam::content_tokens(ca);
  const gradcam::GradCamMap map = gradcam::averaged_gradcam(ca, tokens, config_.frame.grid_h, config_.frame.grid_w);

  CaptionSet set{image.ref, {}};
  const auto wanted = static_cast<std::size_t>(config_.captions_per_image);
  for (int round = 0; round < config_.max_caption_rounds && set.captions.size() < wanted; ++round) {
    std::vector<std::size_t> patches = gradcam::sample_patches(map, config_.num_patch_samples, rng_);
    const std::uint64_t seed = rng_();
    const backends::CaptionResponse r = backends_.vision->caption({image.ref, std::move(patches), seed});
    for (const std::string& raw : r.captions) {
      std::string c = trim(raw);
      if (c.empty() || std::find(set.captions.begin(), set.captions.end(), c) != set.captions.end()) continue;
      set.captions.push_back(std::move(c));
      if (set.captions.size() == wanted) break;
    }
  }
  if (set.captions.size() < wanted) {
    throw lang::PrimitiveError("only " + std::to_string(set.captions.size()) + " unique captions for '" + image.ref +
                               "' after " + std::to_string(config_.max_caption_rounds) + " rounds");
  }
  std::lock_guard guard(cache_lock_);
  auto [it, inserted] = caption_cache_.emplace(image.ref, std::move(set));
  if (inserted) log_.captions.push_back(it->second);
  return it->second;
}

std::string VisualPrimitives::query_images(std::span<const lang::ImageHandle> images, const std::string& question) {
  if (trim(question).empty()) throw lang::PrimitiveError("query() needs a non-empty question");
  if (images.empty()) throw lang::PrimitiveError("query() needs at least one image");
  std::vector<CaptionSet> sets;
  for (const auto& image : images) sets.push_back(captions_for(image, question));

  std::vector<const retrieval::Example*> examples;
  if (qa_store_ != nullptr) {
    examples = select_examples(*qa_store_, retrieval::ExampleKind::kQa, static_cast<std::size_t>(config_.num_qa_shots),
                               question, config_, embeddings_, rng_);
  }
  const prompting::RenderedPrompt prompt = prompting::build_qa_prompt(question, sets, examples);
  log_.qa_prompts.push_back(prompt.text);
  backends::CompleteRequest request;
  request.prompt = prompt.text;
  request.model = config_.qa_model;
  request.max_tokens = config_.max_answer_tokens;
  request.temperature = 0.0;
  request.stop = {"\n"};
  return first_line_answer(backends_.qa_lm->complete(request).text);
}

std::string VisualPrimitives::query(const lang::ImageHandle& image, const std::string& question) {
  return query_images(std::span(&image, 1), question);
}

Position VisualPrimitives::get_pos(const lang::ImageHandle& image, const std::string& text) {
  if (trim(text).empty()) throw lang::PrimitiveError("get_pos() needs a non-empty object description");
  const gradcam::CrossAttention ca = cross_attention(image.ref, text);
  const std::vector<std::size_t> tokens = gradcam::content_tokens(ca);
  const gradcam::GradCamMap map = gradcam::averaged_gradcam(ca, tokens, config_.frame.grid_h, config_.frame.grid_w);
  return gradcam::argmax_position(map, config_.frame);
}

lang::ImageHandle VisualPrimitives::find_matching_image(const lang::ImageList& images, const std::string& text) {
  if (images.empty()) throw lang::PrimitiveError("find_matching_image() needs at least one image");
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const double s = backends_.vision->itc({images[i].ref, text}).score;
    if (i == 0 || s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return images[best];
}

lang::DetectionList VisualPrimitives::find_object(const lang::ImageHandle& image, const std::string& description) {
  if (trim(description).empty()) throw lang::PrimitiveError("find_object() needs a non-empty description");
  const backends::DetectResponse r = backends_.vision->detect({image.ref, description});
  const CoordinateFrame& f = config_.frame;
  const double w = f.right - f.left;
  const double h = f.top - f.bottom;
  lang::DetectionList out;
  for (const auto& d : r.detections) {
    if (d.score < config_.detection_threshold) continue;
    // Wire boxes have a top-left origin; frame y grows upwards.
    out.push_back({d.label, f.left + d.x0 * w, f.bottom + (1.0 - d.y1) * h, f.left + d.x1 * w,
                   f.bottom + (1.0 - d.y0) * h, d.score});
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return out;
}

std::string VisualPrimitives::knowledge_query(const std::string& question) {
  if (trim(question).empty()) throw lang::PrimitiveError("knowledge_query() needs a non-empty question");
  backends::CompleteRequest request;
  request.prompt = prompting::build_knowledge_prompt(question);
  request.model = config_.qa_model;
  request.max_tokens = config_.max_answer_tokens;
  request.temperature = 0.0;
  request.stop = {"\n"};
  for (const std::string& token : config_.knowledge_bias_tokens) request.logit_bias[token] = config_.knowledge_bias_value;
  return first_line_answer(backends_.qa_lm->complete(request).text);
}

}  // namespace codevqa::primitives
