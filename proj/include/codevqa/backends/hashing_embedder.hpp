#pragma once

#include <string>
#include <vector>

#include "codevqa/backends/backend.hpp"

namespace codevqa::backends {

// Bag-of-words feature hashing (FNV-1a per lowercased word, signed buckets),
// L2-normalized. Questions sharing words land close together, which is all the
// offline retrieval tests need from an embedder.
std::vector<double> hashing_embedding(const std::string& text, int dim);

// Backend that serves only embed and describe.
class HashingEmbedder : public Backend {
 public:
  explicit HashingEmbedder(int dim = 64) : dim_(dim) {}

  CompleteResponse complete(const CompleteRequest&) override;
  AttentionResponse attention(const AttentionRequest&) override;
  CaptionResponse caption(const CaptionRequest&) override;
  ItcResponse itc(const ItcRequest&) override;
  DetectResponse detect(const DetectRequest&) override;
  EmbedResponse embed(const EmbedRequest& request) override;
  Description describe() override;

 private:
  int dim_;
};

[[noreturn]] void not_served(const char* capability);

}  // namespace codevqa::backends
