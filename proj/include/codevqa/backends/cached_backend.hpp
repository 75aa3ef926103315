#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "codevqa/backends/backend.hpp"
#include "json.hpp"

namespace codevqa::backends {

inline constexpr std::string_view kEngineVersion = "codevqa-engine/1.0";

std::string sha256_hex(std::string_view data);

// SHA-256 over the canonical JSON (sorted keys, compact) of capability,
// engine version, model tag and request. Field order in the caller's JSON
// does not matter.
std::string cache_key(std::string_view capability, const nlohmann::json& request, std::string_view model_tag,
                      std::string_view engine_version = kEngineVersion);

struct CacheStats {
  std::atomic<long> hits{0};
  std::atomic<long> misses{0};
  std::atomic<long> corrupt{0};
};

// Write-through response cache. Layout: <dir>/<key>.json holding
// {"key", "capability", "created_at", "response"}. Unreadable entries count as
// misses, produce a warning and are overwritten.
class CachedBackend : public Backend {
 public:
  using Warn = std::function<void(const std::string&)>;

  CachedBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir, std::string model_tag,
                Warn warn = nullptr);

  CompleteResponse complete(const CompleteRequest& request) override;
  AttentionResponse attention(const AttentionRequest& request) override;
  CaptionResponse caption(const CaptionRequest& request) override;
  ItcResponse itc(const ItcRequest& request) override;
  DetectResponse detect(const DetectRequest& request) override;
  EmbedResponse embed(const EmbedRequest& request) override;
  Description describe() override;

  const CacheStats& stats() const { return stats_; }
  std::filesystem::path entry_path(const std::string& key) const { return dir_ / (key + ".json"); }

 private:
  template <typename Response, typename Request, typename Call>
  Response through(std::string_view capability, const Request& request, Call call);

  std::shared_ptr<Backend> inner_;
  std::filesystem::path dir_;
  std::string model_tag_;
  Warn warn_;
  CacheStats stats_;
  std::array<std::mutex, 64> locks_;
  std::mutex describe_lock_;
  std::optional<Description> description_;
};

}  // namespace codevqa::backends
