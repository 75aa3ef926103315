#pragma once

#include <string>
#include <string_view>

#include "codevqa/backends/backend.hpp"
#include "json.hpp"

// JSON wire format of the backend capabilities. Field names are part of the
// external contract; see docs/protocol.md.
namespace codevqa::backends {

using nlohmann::json;

namespace routes {
inline constexpr std::string_view kComplete = "/v1/complete";
inline constexpr std::string_view kAttention = "/v1/attention";
inline constexpr std::string_view kCaption = "/v1/caption";
inline constexpr std::string_view kItc = "/v1/itc";
inline constexpr std::string_view kDetect = "/v1/detect";
inline constexpr std::string_view kEmbed = "/v1/embed";
inline constexpr std::string_view kDescribe = "/v1/describe";
}  // namespace routes

void to_json(json& j, const CompleteRequest& v);
void from_json(const json& j, CompleteRequest& v);
void to_json(json& j, const CompleteResponse& v);
void from_json(const json& j, CompleteResponse& v);
void to_json(json& j, const AttentionRequest& v);
void from_json(const json& j, AttentionRequest& v);
void to_json(json& j, const AttentionResponse& v);
void from_json(const json& j, AttentionResponse& v);
void to_json(json& j, const CaptionRequest& v);
void from_json(const json& j, CaptionRequest& v);
void to_json(json& j, const CaptionResponse& v);
void from_json(const json& j, CaptionResponse& v);
void to_json(json& j, const ItcRequest& v);
void from_json(const json& j, ItcRequest& v);
void to_json(json& j, const ItcResponse& v);
void from_json(const json& j, ItcResponse& v);
void to_json(json& j, const DetectRequest& v);
void from_json(const json& j, DetectRequest& v);
void to_json(json& j, const WireDetection& v);
void from_json(const json& j, WireDetection& v);
void to_json(json& j, const DetectResponse& v);
void from_json(const json& j, DetectResponse& v);
void to_json(json& j, const EmbedRequest& v);
void from_json(const json& j, EmbedRequest& v);
void to_json(json& j, const EmbedResponse& v);
void from_json(const json& j, EmbedResponse& v);
void to_json(json& j, const Description& v);
void from_json(const json& j, Description& v);

// Decodes with every JSON type error reported as BackendError(kProtocol).
template <typename T>
T decode(const json& j) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw BackendError(BackendErrorKind::kProtocol, std::string("malformed payload: ") + e.what());
  }
}

// Shape checks against the backend's declared description. Each throws
// BackendError(kProtocol) and never repairs the payload.
void validate(const AttentionResponse& response, const Description& description);
void validate(const CaptionResponse& response);
void validate(const DetectResponse& response);
void validate(const EmbedResponse& response, const Description& description);
void validate(const Description& description);

// {"error": {"capability": ..., "message": ...}}
json error_body(std::string_view capability, std::string_view message);

}  // namespace codevqa::backends
