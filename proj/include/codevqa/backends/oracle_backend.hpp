#pragma once

#include <map>
#include <string>
#include <vector>

#include "codevqa/backends/backend.hpp"
#include "codevqa/backends/scene_graph.hpp"

namespace codevqa::backends {

class UnsupportedTemplate : public Error {
 public:
  using Error::Error;
};

// Rule-based answers over scene graphs. Templates: existence ("Is there a
// red chair?"), color ("What color is the chair?"), attribute ("Is the chair
// red?", "Does the bench look silver and metallic?"), count ("How many shoes
// are there?"), exact count ("Are there exactly 2 pink shoes?"), spatial ("Is
// the cup to the left of the plate?", "above", "below"), conjunction ("Is
// there a cup and a plate?"). Questions outside the rules throw
// UnsupportedTemplate.
std::string answer_from_scene(const SceneGraph& scene, const std::string& question);

// Set-level questions ("How many images contain a dog?", "How many images
// contain exactly 2 dogs?") and converted statements ("Is it true that at
// least one image contains a dog?", "Is it true that there are more dogs than
// cats?") are answered over every scene. "Is it true that there are two
// dogs?" and any other question is answered from the first scene.
std::string answer_from_scenes(const std::vector<const SceneGraph*>& scenes, const std::string& question);

// Every caption the oracle emits starts with "[<image_ref>] ", which is how
// its completion endpoint recovers the scenes a QA prompt talks about.
std::string caption_prefix(const std::string& image_ref);

struct OracleOptions {
  int grid_w = 24;
  int grid_h = 24;
  int captions_per_round = 8;
  int embed_dim = 64;
  // Answers for caption-free prompts (knowledge_query), keyed by question.
  std::map<std::string, std::string> knowledge;
};

// Deterministic stand-in for the vision models and the answer LM, with
// provable ground truth. Position 0 of every attention response is a special
// [CLS] token whose map is uniform, so engines that fail to drop special
// tokens see diluted relevance.
class OracleBackend : public Backend {
 public:
  explicit OracleBackend(SceneLibrary scenes, OracleOptions options = {});

  CompleteResponse complete(const CompleteRequest& request) override;
  AttentionResponse attention(const AttentionRequest& request) override;
  CaptionResponse caption(const CaptionRequest& request) override;
  ItcResponse itc(const ItcRequest& request) override;
  DetectResponse detect(const DetectRequest& request) override;
  EmbedResponse embed(const EmbedRequest& request) override;
  Description describe() override;

  const SceneLibrary& scenes() const { return scenes_; }

 private:
  const SceneGraph& scene(const std::string& image_ref) const;

  SceneLibrary scenes_;
  OracleOptions options_;
};

// Token-overlap score between a text and a scene's vocabulary (names, their
// plurals, attributes, relation predicates), ignoring stopwords.
double overlap_score(const SceneGraph& scene, const std::string& text);

}  // namespace codevqa::backends
