#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace codevqa {

// One question (or rewritten statement) together with the images it refers to.
struct VQAInstance {
  std::string id;
  std::string text;
  bool is_statement = false;
  std::vector<std::string> image_refs;
  std::vector<std::string> gold_answers;
  std::string dataset;
  std::optional<std::string> question_type;

  std::size_t num_images() const { return image_refs.size(); }

  // Throws codevqa::Error when image_refs or gold_answers is empty.
  void validate() const;

  bool operator==(const VQAInstance&) const = default;
};

// Coordinate system exposed to generated programs (LEFT/BOTTOM/RIGHT/TOP) and
// the vision encoder's patch grid it is laid over. y grows towards TOP.
struct CoordinateFrame {
  double left = 0.0;
  double bottom = 0.0;
  double right = 24.0;
  double top = 24.0;
  int grid_w = 24;
  int grid_h = 24;

  void validate() const;
  bool contains_strictly(double x, double y) const {
    return x > left && x < right && y > bottom && y < top;
  }
  bool operator==(const CoordinateFrame&) const = default;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

// Box in frame coordinates: x0 < x1, y0 < y1.
struct Detection {
  std::string label;
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  double score = 0.0;
  bool operator==(const Detection&) const = default;
};

struct CaptionSet {
  std::string image_ref;
  std::vector<std::string> captions;
  bool operator==(const CaptionSet&) const = default;
};

struct InterpreterLimits {
  std::int64_t max_steps = 10000;
  std::int64_t max_loop_iterations = 1000;
  std::int64_t max_primitive_calls = 256;

  void validate() const;
  bool operator==(const InterpreterLimits&) const = default;
};

enum class DatasetFlavor { kSingleImage, kMultiImage };

enum class ExampleOrder { kMostSimilarLast, kMostSimilarFirst };

enum class RetrievalMode { kEmbedding, kRandom };

struct EngineConfig {
  DatasetFlavor flavor = DatasetFlavor::kSingleImage;
  int num_code_shots = 12;
  int num_qa_shots = 12;
  int captions_per_image = 7;
  int num_patch_samples = 20;
  int gradcam_layer = 6;
  int max_caption_rounds = 10;
  double detection_threshold = 0.5;
  // Tokens suppressed in knowledge_query completions.
  std::vector<std::string> knowledge_bias_tokens = {"-", "to", "\xC2\xB0"};
  double knowledge_bias_value = -100.0;
  // Primitives beyond the flavor's printed API (find_object, knowledge_query).
  std::vector<std::string> extra_primitives;
  int max_program_tokens = 512;
  int max_answer_tokens = 16;
  // Prompts above this estimate are flagged in the trace, never truncated.
  int max_prompt_tokens = 8000;
  ExampleOrder example_order = ExampleOrder::kMostSimilarLast;
  RetrievalMode retrieval = RetrievalMode::kEmbedding;
  CoordinateFrame frame;
  std::uint64_t rng_seed = 0;
  InterpreterLimits limits;
  std::string code_model = "code-davinci-002";
  std::string qa_model = "code-davinci-002";

  // GQA: 12 code shots, 7 captions. COVR: 6 code shots, 3 captions.
  static EngineConfig single_image();
  static EngineConfig multi_image();

  void validate() const;
  bool operator==(const EngineConfig&) const = default;
};

struct AnswerRecord {
  std::string instance_id;
  std::string predicted;
  bool used_fallback = false;
  std::string trace_ref;
  bool operator==(const AnswerRecord&) const = default;
};

std::string to_string(DatasetFlavor flavor);
DatasetFlavor flavor_from_string(const std::string& text);
std::string to_string(ExampleOrder order);
ExampleOrder example_order_from_string(const std::string& text);
std::string to_string(RetrievalMode mode);
RetrievalMode retrieval_mode_from_string(const std::string& text);

}  // namespace codevqa
