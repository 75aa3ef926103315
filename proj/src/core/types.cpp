#include "codevqa/core/types.hpp"

#include "codevqa/core/error.hpp"

namespace codevqa {

void VQAInstance::validate() const {
  if (image_refs.empty()) throw Error("instance '" + id + "' has no image_refs");
  if (gold_answers.empty()) throw Error("instance '" + id + "' has no gold_answers");
}

void CoordinateFrame::validate() const {
  if (!(left < right)) throw ConfigError("frame", "left must be < right");
  if (!(bottom < top)) throw ConfigError("frame", "bottom must be < top");
  if (grid_w < 1 || grid_h < 1) throw ConfigError("frame", "grid dimensions must be >= 1");
}

void InterpreterLimits::validate() const {
  if (max_steps <= 0) throw ConfigError("limits.max_steps", "must be positive");
  if (max_loop_iterations <= 0) throw ConfigError("limits.max_loop_iterations", "must be positive");
  if (max_primitive_calls <= 0) throw ConfigError("limits.max_primitive_calls", "must be positive");
}

EngineConfig EngineConfig::single_image() { return EngineConfig{}; }

EngineConfig EngineConfig::multi_image() {
  EngineConfig config;
  config.flavor = DatasetFlavor::kMultiImage;
  config.num_code_shots = 6;
  config.num_qa_shots = 6;
  config.captions_per_image = 3;
  return config;
}

void EngineConfig::validate() const {
  auto positive = [](int value, const char* field) {
    if (value <= 0) throw ConfigError(field, "must be positive");
  };
  positive(num_code_shots, "engine.num_code_shots");
  positive(num_qa_shots, "engine.num_qa_shots");
  positive(captions_per_image, "engine.captions_per_image");
  positive(num_patch_samples, "engine.num_patch_samples");
  positive(gradcam_layer, "engine.gradcam_layer");
  positive(max_caption_rounds, "engine.max_caption_rounds");
  positive(max_program_tokens, "engine.max_program_tokens");
  positive(max_answer_tokens, "engine.max_answer_tokens");
  positive(max_prompt_tokens, "engine.max_prompt_tokens");
  if (detection_threshold < 0.0 || detection_threshold > 1.0) {
    throw ConfigError("engine.detection_threshold", "must lie in [0, 1]");
  }
  for (const auto& name : extra_primitives) {
    if (name != "find_object" && name != "knowledge_query") {
      throw ConfigError("engine.extra_primitives", "unknown primitive '" + name + "'");
    }
  }
  frame.validate();
  limits.validate();
}

std::string to_string(DatasetFlavor flavor) {
  return flavor == DatasetFlavor::kSingleImage ? "single-image" : "multi-image";
}

DatasetFlavor flavor_from_string(const std::string& text) {
  if (text == "single-image") return DatasetFlavor::kSingleImage;
  if (text == "multi-image") return DatasetFlavor::kMultiImage;
  throw ConfigError("flavor", "expected single-image or multi-image, got '" + text + "'");
}

std::string to_string(ExampleOrder order) {
  return order == ExampleOrder::kMostSimilarLast ? "most-similar-last" : "most-similar-first";
}

ExampleOrder example_order_from_string(const std::string& text) {
  if (text == "most-similar-last") return ExampleOrder::kMostSimilarLast;
  if (text == "most-similar-first") return ExampleOrder::kMostSimilarFirst;
  throw ConfigError("example_order", "expected most-similar-last or most-similar-first");
}

std::string to_string(RetrievalMode mode) {
  return mode == RetrievalMode::kEmbedding ? "embedding" : "random";
}

RetrievalMode retrieval_mode_from_string(const std::string& text) {
  if (text == "embedding") return RetrievalMode::kEmbedding;
  if (text == "random") return RetrievalMode::kRandom;
  throw ConfigError("retrieval", "expected embedding or random, got '" + text + "'");
}

}  // namespace codevqa
