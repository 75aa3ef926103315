#include "codevqa/backends/protocol.hpp"

#include <cmath>

namespace codevqa::backends {

std::string_view to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::kTransport: return "Transport";
    case BackendErrorKind::kProtocol: return "Protocol";
    case BackendErrorKind::kRemote: return "RemoteError";
    case BackendErrorKind::kTimeout: return "Timeout";
  }
  return "?";
}

namespace {

[[noreturn]] void protocol_error(const std::string& message) {
  throw BackendError(BackendErrorKind::kProtocol, message);
}

json matrix_to_json(const gradcam::Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

gradcam::Matrix matrix_from_json(const json& j, const char* field) {
  if (!j.is_array()) protocol_error(std::string(field) + " must be an array of rows");
  gradcam::Matrix m;
  m.rows = j.size();
  for (std::size_t r = 0; r < j.size(); ++r) {
    const json& row = j[r];
    if (!row.is_array()) protocol_error(std::string(field) + " row " + std::to_string(r) + " is not an array");
    if (r == 0) {
      m.cols = row.size();
    } else if (row.size() != m.cols) {
      protocol_error(std::string(field) + " rows have unequal lengths");
    }
    for (const json& v : row) {
      if (!v.is_number()) protocol_error(std::string(field) + " entries must be numbers");
      m.data.push_back(v.get<double>());
    }
  }
  return m;
}

const json& field(const json& j, const char* name) {
  if (!j.is_object()) protocol_error("payload must be a JSON object");
  auto it = j.find(name);
  if (it == j.end()) protocol_error(std::string("missing field '") + name + "'");
  return *it;
}

}  // namespace

void to_json(json& j, const CompleteRequest& v) {
  j = {{"prompt", v.prompt},
       {"model", v.model},
       {"max_tokens", v.max_tokens},
       {"temperature", v.temperature},
       {"stop", v.stop}};
  if (!v.logit_bias.empty()) j["logit_bias"] = v.logit_bias;
}

void from_json(const json& j, CompleteRequest& v) {
  v.prompt = field(j, "prompt").get<std::string>();
  v.model = j.value("model", std::string());
  v.max_tokens = j.value("max_tokens", 256);
  v.temperature = j.value("temperature", 0.0);
  v.stop = j.value("stop", std::vector<std::string>{});
  v.logit_bias = j.value("logit_bias", std::map<std::string, double>{});
}

void to_json(json& j, const CompleteResponse& v) { j = {{"text", v.text}}; }
void from_json(const json& j, CompleteResponse& v) { v.text = field(j, "text").get<std::string>(); }

void to_json(json& j, const AttentionRequest& v) {
  j = {{"image_ref", v.image_ref}, {"text", v.text}, {"layer", v.layer}};
}

void from_json(const json& j, AttentionRequest& v) {
  v.image_ref = field(j, "image_ref").get<std::string>();
  v.text = field(j, "text").get<std::string>();
  v.layer = j.value("layer", 6);
}

void to_json(json& j, const AttentionResponse& v) {
  j = {{"tokens", v.tokens},
       {"special_positions", v.special_positions},
       {"attention", matrix_to_json(v.attention)},
       {"gradient", matrix_to_json(v.gradient)}};
}

void from_json(const json& j, AttentionResponse& v) {
  v.tokens = field(j, "tokens").get<std::vector<std::string>>();
  v.special_positions = j.value("special_positions", std::vector<std::size_t>{});
  v.attention = matrix_from_json(field(j, "attention"), "attention");
  v.gradient = matrix_from_json(field(j, "gradient"), "gradient");
}

void to_json(json& j, const CaptionRequest& v) {
  j = {{"image_ref", v.image_ref}, {"patches", v.patches}, {"seed", v.seed}};
}

void from_json(const json& j, CaptionRequest& v) {
  v.image_ref = field(j, "image_ref").get<std::string>();
  v.patches = field(j, "patches").get<std::vector<std::size_t>>();
  v.seed = j.value("seed", std::uint64_t{0});
}

void to_json(json& j, const CaptionResponse& v) { j = {{"captions", v.captions}}; }
void from_json(const json& j, CaptionResponse& v) {
  v.captions = field(j, "captions").get<std::vector<std::string>>();
}

void to_json(json& j, const ItcRequest& v) { j = {{"image_ref", v.image_ref}, {"text", v.text}}; }
void from_json(const json& j, ItcRequest& v) {
  v.image_ref = field(j, "image_ref").get<std::string>();
  v.text = field(j, "text").get<std::string>();
}

void to_json(json& j, const ItcResponse& v) { j = {{"score", v.score}}; }
void from_json(const json& j, ItcResponse& v) {
  const json& score = field(j, "score");
  if (!score.is_number()) protocol_error("score must be a number");
  v.score = score.get<double>();
}

void to_json(json& j, const DetectRequest& v) { j = {{"image_ref", v.image_ref}, {"text", v.text}}; }
void from_json(const json& j, DetectRequest& v) {
  v.image_ref = field(j, "image_ref").get<std::string>();
  v.text = field(j, "text").get<std::string>();
}

void to_json(json& j, const WireDetection& v) {
  j = {{"label", v.label}, {"box", {v.x0, v.y0, v.x1, v.y1}}, {"score", v.score}};
}

void from_json(const json& j, WireDetection& v) {
  v.label = field(j, "label").get<std::string>();
  const json& box = field(j, "box");
  if (!box.is_array() || box.size() != 4) protocol_error("box must be [x0, y0, x1, y1]");
  v.x0 = box[0].get<double>();
  v.y0 = box[1].get<double>();
  v.x1 = box[2].get<double>();
  v.y1 = box[3].get<double>();
  v.score = field(j, "score").get<double>();
}

void to_json(json& j, const DetectResponse& v) { j = {{"detections", v.detections}}; }
void from_json(const json& j, DetectResponse& v) {
  v.detections = field(j, "detections").get<std::vector<WireDetection>>();
}

void to_json(json& j, const EmbedRequest& v) { j = {{"text", v.text}}; }
void from_json(const json& j, EmbedRequest& v) { v.text = field(j, "text").get<std::string>(); }

void to_json(json& j, const EmbedResponse& v) { j = {{"embedding", v.embedding}}; }
void from_json(const json& j, EmbedResponse& v) {
  v.embedding = field(j, "embedding").get<std::vector<double>>();
}

void to_json(json& j, const Description& v) {
  j = {{"grid_w", v.grid_w},
       {"grid_h", v.grid_h},
       {"embed_dim", v.embed_dim},
       {"special_token_rule", v.special_token_rule}};
}

void from_json(const json& j, Description& v) {
  v.grid_w = field(j, "grid_w").get<int>();
  v.grid_h = field(j, "grid_h").get<int>();
  v.embed_dim = field(j, "embed_dim").get<int>();
  v.special_token_rule = j.value("special_token_rule", std::string());
}

void validate(const AttentionResponse& response, const Description& description) {
  const std::size_t patches =
      static_cast<std::size_t>(description.grid_w) * static_cast<std::size_t>(description.grid_h);
  const std::size_t tokens = response.tokens.size();
  auto check = [&](const gradcam::Matrix& m, const char* name) {
    if (m.rows != tokens) {
      protocol_error(std::string(name) + " has " + std::to_string(m.rows) + " rows for " + std::to_string(tokens) +
                     " tokens");
    }
    if (tokens > 0 && m.cols != patches) {
      protocol_error(std::string(name) + " has width " + std::to_string(m.cols) + ", expected grid " +
                     std::to_string(description.grid_h) + "x" + std::to_string(description.grid_w) + " = " +
                     std::to_string(patches));
    }
    if (m.data.size() != m.rows * m.cols) protocol_error(std::string(name) + " storage does not match its shape");
    for (double v : m.data) {
      if (!std::isfinite(v)) protocol_error(std::string(name) + " contains a non-finite value");
    }
  };
  if (tokens == 0) protocol_error("attention response has no tokens");
  check(response.attention, "attention");
  check(response.gradient, "gradient");
  for (double v : response.attention.data) {
    if (v < 0.0) protocol_error("attention contains a negative weight");
  }
  for (std::size_t p : response.special_positions) {
    if (p >= tokens) protocol_error("special position " + std::to_string(p) + " out of range");
  }
}

void validate(const CaptionResponse& response) {
  if (response.captions.empty()) protocol_error("caption response has no captions");
}

void validate(const DetectResponse& response) {
  for (const auto& d : response.detections) {
    const bool box_ok = d.x0 >= 0.0 && d.y0 >= 0.0 && d.x1 <= 1.0 && d.y1 <= 1.0 && d.x0 < d.x1 && d.y0 < d.y1;
    if (!box_ok) protocol_error("detection '" + d.label + "' has an invalid box");
    if (!(d.score >= 0.0 && d.score <= 1.0)) protocol_error("detection '" + d.label + "' score outside [0, 1]");
  }
}

void validate(const EmbedResponse& response, const Description& description) {
  if (response.embedding.empty()) protocol_error("empty embedding");
  if (description.embed_dim > 0 && response.embedding.size() != static_cast<std::size_t>(description.embed_dim)) {
    protocol_error("embedding has dimension " + std::to_string(response.embedding.size()) + ", expected " +
                   std::to_string(description.embed_dim));
  }
  for (double v : response.embedding) {
    if (!std::isfinite(v)) protocol_error("embedding contains a non-finite value");
  }
}

void validate(const Description& description) {
  if (description.grid_w < 1 || description.grid_h < 1) protocol_error("grid dimensions must be positive");
  if (description.embed_dim < 0) protocol_error("embed_dim must be non-negative");
}

json error_body(std::string_view capability, std::string_view message) {
  return {{"error", {{"capability", capability}, {"message", message}}}};
}

}  // namespace codevqa::backends
