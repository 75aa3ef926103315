#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "codevqa/core/error.hpp"
#include "codevqa/gradcam/gradcam.hpp"

namespace codevqa::backends {

enum class BackendErrorKind { kTransport, kProtocol, kRemote, kTimeout };

std::string_view to_string(BackendErrorKind kind);

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& message)
      : Error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  BackendErrorKind kind() const { return kind_; }
  bool transient() const { return kind_ == BackendErrorKind::kTransport || kind_ == BackendErrorKind::kTimeout; }

 private:
  BackendErrorKind kind_;
};

// ---- Requests and responses, one pair per capability -----------------------

struct CompleteRequest {
  std::string prompt;
  std::string model;
  int max_tokens = 256;
  double temperature = 0.0;
  std::vector<std::string> stop;
  // Serialized only when non-empty.
  std::map<std::string, double> logit_bias;
  bool operator==(const CompleteRequest&) const = default;
};

struct CompleteResponse {
  std::string text;
  bool operator==(const CompleteResponse&) const = default;
};

struct AttentionRequest {
  std::string image_ref;
  std::string text;
  int layer = 6;
  bool operator==(const AttentionRequest&) const = default;
};

struct AttentionResponse {
  std::vector<std::string> tokens;
  std::vector<std::size_t> special_positions;
  gradcam::Matrix attention;
  gradcam::Matrix gradient;
  bool operator==(const AttentionResponse&) const = default;
};

struct CaptionRequest {
  std::string image_ref;
  std::vector<std::size_t> patches;
  std::uint64_t seed = 0;
  bool operator==(const CaptionRequest&) const = default;
};

struct CaptionResponse {
  std::vector<std::string> captions;
  bool operator==(const CaptionResponse&) const = default;
};

struct ItcRequest {
  std::string image_ref;
  std::string text;
  bool operator==(const ItcRequest&) const = default;
};

struct ItcResponse {
  double score = 0.0;
  bool operator==(const ItcResponse&) const = default;
};

struct DetectRequest {
  std::string image_ref;
  std::string text;
  bool operator==(const DetectRequest&) const = default;
};

// Box in normalized image coordinates: origin top-left, x right, y down.
struct WireDetection {
  std::string label;
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  double score = 0.0;
  bool operator==(const WireDetection&) const = default;
};

struct DetectResponse {
  std::vector<WireDetection> detections;
  bool operator==(const DetectResponse&) const = default;
};

struct EmbedRequest {
  std::string text;
  bool operator==(const EmbedRequest&) const = default;
};

struct EmbedResponse {
  std::vector<double> embedding;
  bool operator==(const EmbedResponse&) const = default;
};

struct Description {
  int grid_w = 24;
  int grid_h = 24;
  int embed_dim = 0;
  // Free-form statement of which token positions a backend marks special,
  // e.g. "leading [CLS]". Per-request positions travel in AttentionResponse.
  std::string special_token_rule;
  bool operator==(const Description&) const = default;
};

// One model host. A single object may serve every role, or roles may be split
// across hosts (see BackendSet).
class Backend {
 public:
  virtual ~Backend() = default;

  virtual CompleteResponse complete(const CompleteRequest& request) = 0;
  virtual AttentionResponse attention(const AttentionRequest& request) = 0;
  virtual CaptionResponse caption(const CaptionRequest& request) = 0;
  virtual ItcResponse itc(const ItcRequest& request) = 0;
  virtual DetectResponse detect(const DetectRequest& request) = 0;
  virtual EmbedResponse embed(const EmbedRequest& request) = 0;
  // Constant for the backend's lifetime.
  virtual Description describe() = 0;
};

// The engine's view of its models: code LM, answer LM, the vision models
// (ITM attention, captioner, ITC, detector), and the sentence embedder.
struct BackendSet {
  std::shared_ptr<Backend> code_lm;
  std::shared_ptr<Backend> qa_lm;
  std::shared_ptr<Backend> vision;
  std::shared_ptr<Backend> embedder;

  static BackendSet single(std::shared_ptr<Backend> backend) { return {backend, backend, backend, backend}; }
};

}  // namespace codevqa::backends
