#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>

#include "codevqa/backends/backend.hpp"
#include "json.hpp"

namespace codevqa::backends {

struct HttpOptions {
  // e.g. "http://127.0.0.1:8080"
  std::string base_url;
  int timeout_ms = 30000;
  int max_attempts = 3;
  int initial_backoff_ms = 200;
  // Name of the environment variable holding the bearer token. The token
  // itself never appears in config files or logs.
  std::string api_key_env = "CODEVQA_API_KEY";
  int max_in_flight = 8;
};

// Client side of the wire protocol. Transport failures, timeouts and 502/503/504
// are retried with exponential backoff; backend-reported errors are not.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpOptions options);

  CompleteResponse complete(const CompleteRequest& request) override;
  AttentionResponse attention(const AttentionRequest& request) override;
  CaptionResponse caption(const CaptionRequest& request) override;
  ItcResponse itc(const ItcRequest& request) override;
  DetectResponse detect(const DetectRequest& request) override;
  EmbedResponse embed(const EmbedRequest& request) override;
  // Fetched once, then reused: describe() is constant per backend.
  Description describe() override;

  const std::string& base_url() const { return options_.base_url; }

  // Raw call: POST body to route, returning the decoded JSON body.
  nlohmann::json call(std::string_view route, const nlohmann::json& body);

 private:
  nlohmann::json attempt(std::string_view route, const nlohmann::json* body);
  nlohmann::json with_retries(std::string_view route, const nlohmann::json* body);

  HttpOptions options_;
  std::string scheme_host_port_;
  std::optional<std::string> token_;
  std::counting_semaphore<1 << 16> in_flight_;
  std::mutex describe_lock_;
  std::optional<Description> description_;
};

}  // namespace codevqa::backends
