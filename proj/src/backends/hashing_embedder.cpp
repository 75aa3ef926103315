#include "codevqa/backends/hashing_embedder.hpp"

#include <cmath>
#include <cstdint>

#include "codevqa/core/text.hpp"

namespace codevqa::backends {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<double> hashing_embedding(const std::string& text, int dim) {
  if (dim < 1) throw Error("embedding dimension must be positive");
  std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
  for (const std::string& w : words(text)) {
    const std::uint64_t h = fnv1a(w);
    v[h % static_cast<std::uint64_t>(dim)] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

void not_served(const char* capability) {
  throw BackendError(BackendErrorKind::kRemote, std::string("capability '") + capability + "' is not served here");
}

CompleteResponse HashingEmbedder::complete(const CompleteRequest&) { not_served("complete"); }
AttentionResponse HashingEmbedder::attention(const AttentionRequest&) { not_served("attention"); }
CaptionResponse HashingEmbedder::caption(const CaptionRequest&) { not_served("caption"); }
ItcResponse HashingEmbedder::itc(const ItcRequest&) { not_served("itc"); }
DetectResponse HashingEmbedder::detect(const DetectRequest&) { not_served("detect"); }

EmbedResponse HashingEmbedder::embed(const EmbedRequest& request) {
  return {hashing_embedding(request.text, dim_)};
}

Description HashingEmbedder::describe() { return Description{1, 1, dim_, "none"}; }

}  // namespace codevqa::backends
