#include "codevqa/backends/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include "codevqa/backends/protocol.hpp"
#include "httplib.h"

namespace codevqa::backends {

namespace {

std::string remote_message(const std::string& body) {
  try {
    const json j = json::parse(body);
    if (j.contains("error") && j["error"].contains("message")) return j["error"]["message"].get<std::string>();
  } catch (const json::exception&) {
  }
  return body.substr(0, 200);
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1 << 16>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }

 private:
  std::counting_semaphore<1 << 16>& s_;
};

}  // namespace

HttpBackend::HttpBackend(HttpOptions options)
    : options_(std::move(options)), in_flight_(std::max(1, options_.max_in_flight)) {
  scheme_host_port_ = options_.base_url;
  while (!scheme_host_port_.empty() && scheme_host_port_.back() == '/') scheme_host_port_.pop_back();
  if (scheme_host_port_.empty()) throw ConfigError("base_url", "backend endpoint is empty");
  if (options_.max_attempts < 1) throw ConfigError("max_attempts", "must be at least 1");
  if (!options_.api_key_env.empty()) {
    if (const char* v = std::getenv(options_.api_key_env.c_str()); v != nullptr && *v != '\0') token_ = v;
  }
}

json HttpBackend::attempt(std::string_view route, const json* body) {
  SlotGuard slot(in_flight_);
  httplib::Client client(scheme_host_port_);
  if (!client.is_valid()) throw ConfigError("base_url", "cannot use endpoint '" + scheme_host_port_ + "'");
  const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (token_) headers.emplace("Authorization", "Bearer " + *token_);

  const std::string path(route);
  httplib::Result res = body ? client.Post(path, headers, body->dump(), "application/json") : client.Get(path, headers);
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout) {
      throw BackendError(BackendErrorKind::kTimeout, path + ": " + httplib::to_string(err));
    }
    throw BackendError(BackendErrorKind::kTransport, path + ": " + httplib::to_string(err));
  }
  const int status = res->status;
  if (status == 200) {
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw BackendError(BackendErrorKind::kProtocol, path + ": response is not JSON: " + e.what());
    }
  }
  if (status == 408 || status == 504) {
    throw BackendError(BackendErrorKind::kTimeout, path + ": HTTP " + std::to_string(status));
  }
  if (status == 502 || status == 503) {
    throw BackendError(BackendErrorKind::kTransport, path + ": HTTP " + std::to_string(status));
  }
  throw BackendError(BackendErrorKind::kRemote,
                     path + ": HTTP " + std::to_string(status) + ": " + remote_message(res->body));
}

json HttpBackend::with_retries(std::string_view route, const json* body) {
  int backoff = options_.initial_backoff_ms;
  for (int i = 1;; ++i) {
    try {
      return attempt(route, body);
    } catch (const BackendError& e) {
      if (!e.transient() || i >= options_.max_attempts) throw;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
    backoff *= 2;
  }
}

json HttpBackend::call(std::string_view route, const json& body) { return with_retries(route, &body); }

CompleteResponse HttpBackend::complete(const CompleteRequest& request) {
  return decode<CompleteResponse>(call(routes::kComplete, json(request)));
}

AttentionResponse HttpBackend::attention(const AttentionRequest& request) {
  auto response = decode<AttentionResponse>(call(routes::kAttention, json(request)));
  validate(response, describe());
  return response;
}

CaptionResponse HttpBackend::caption(const CaptionRequest& request) {
  auto response = decode<CaptionResponse>(call(routes::kCaption, json(request)));
  validate(response);
  return response;
}

ItcResponse HttpBackend::itc(const ItcRequest& request) {
  return decode<ItcResponse>(call(routes::kItc, json(request)));
}

DetectResponse HttpBackend::detect(const DetectRequest& request) {
  auto response = decode<DetectResponse>(call(routes::kDetect, json(request)));
  validate(response);
  return response;
}

EmbedResponse HttpBackend::embed(const EmbedRequest& request) {
  auto response = decode<EmbedResponse>(call(routes::kEmbed, json(request)));
  validate(response, describe());
  return response;
}

Description HttpBackend::describe() {
  std::lock_guard guard(describe_lock_);
  if (!description_) {
    auto d = decode<Description>(with_retries(routes::kDescribe, nullptr));
    validate(d);
    description_ = d;
  }
  return *description_;
}

}  // namespace codevqa::backends
