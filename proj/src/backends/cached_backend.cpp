#include "codevqa/backends/cached_backend.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "codevqa/backends/protocol.hpp"

namespace codevqa::backends {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string cache_key(std::string_view capability, const json& request, std::string_view model_tag,
                      std::string_view engine_version) {
  // nlohmann objects keep keys sorted, so dump() is already canonical.
  const json material = {{"capability", capability},
                         {"engine_version", engine_version},
                         {"model", model_tag},
                         {"request", request}};
  return sha256_hex(material.dump());
}

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir, std::string model_tag,
                             Warn warn)
    : inner_(std::move(inner)), dir_(std::move(dir)), model_tag_(std::move(model_tag)), warn_(std::move(warn)) {
  if (!inner_) throw Error("cached backend needs an inner backend");
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error("cannot create cache directory " + dir_.string() + ": " + ec.message());
  if (!warn_) warn_ = [](const std::string& m) { std::cerr << "warning: " << m << "\n"; };
}

template <typename Response, typename Request, typename Call>
Response CachedBackend::through(std::string_view capability, const Request& request, Call call) {
  const std::string key = cache_key(capability, json(request), model_tag_);
  const std::filesystem::path path = entry_path(key);
  std::lock_guard guard(locks_[std::stoul(key.substr(0, 2), nullptr, 16) % locks_.size()]);

  if (std::ifstream in(path); in) {
    try {
      const json entry = json::parse(in);
      if (entry.at("key").get<std::string>() != key) throw Error("key mismatch");
      Response cached = decode<Response>(entry.at("response"));
      ++stats_.hits;
      return cached;
    } catch (const std::exception& e) {
      ++stats_.corrupt;
      warn_("cache entry " + path.string() + " is unreadable (" + e.what() + "); recomputing");
    }
  }
  ++stats_.misses;
  Response fresh = call(request);

  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  const json entry = {{"key", key}, {"capability", capability}, {"created_at", now}, {"response", json(fresh)}};
  // Write to a private temp file, then rename so readers never see a torn entry.
  std::ostringstream tmp_name;
  tmp_name << key << ".tmp." << std::this_thread::get_id();
  const std::filesystem::path tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << entry.dump() << "\n";
    if (!out) {
      warn_("cannot write cache entry " + tmp.string());
      return fresh;
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) warn_("cannot install cache entry " + path.string() + ": " + ec.message());
  return fresh;
}

CompleteResponse CachedBackend::complete(const CompleteRequest& request) {
  return through<CompleteResponse>("complete", request, [&](const auto& r) { return inner_->complete(r); });
}

AttentionResponse CachedBackend::attention(const AttentionRequest& request) {
  return through<AttentionResponse>("attention", request, [&](const auto& r) { return inner_->attention(r); });
}

CaptionResponse CachedBackend::caption(const CaptionRequest& request) {
  return through<CaptionResponse>("caption", request, [&](const auto& r) { return inner_->caption(r); });
}

ItcResponse CachedBackend::itc(const ItcRequest& request) {
  return through<ItcResponse>("itc", request, [&](const auto& r) { return inner_->itc(r); });
}

DetectResponse CachedBackend::detect(const DetectRequest& request) {
  return through<DetectResponse>("detect", request, [&](const auto& r) { return inner_->detect(r); });
}

EmbedResponse CachedBackend::embed(const EmbedRequest& request) {
  return through<EmbedResponse>("embed", request, [&](const auto& r) { return inner_->embed(r); });
}

Description CachedBackend::describe() {
  std::lock_guard guard(describe_lock_);
  if (!description_) description_ = inner_->describe();
  return *description_;
}

}  // namespace codevqa::backends
