#pragma once

#include <memory>

#include "asalpp/embed/embedding.hpp"

namespace asalpp {

/// JSON-over-HTTP backend:
///   POST {endpoint}/embed_text  {"texts": [...]}             -> {"embeddings": [[...]], "dim": D}
///   POST {endpoint}/embed_image {"images_png_base64": [...]} -> same shape
/// Images are bilinearly resized to image_side client-side and sent as PNG.
/// Retries up to retry_limit; non-200 after retries raises ProviderError with
/// endpoint and status. In-flight requests are bounded by max_inflight.
class RemoteProvider : public EmbeddingProvider {
 public:
  explicit RemoteProvider(const ProviderConfig& config);
  ~RemoteProvider() override;

  EmbeddingVector embed_image(const Frame& frame) const override;
  EmbeddingVector embed_text(const std::string& prompt) const override;
  std::vector<EmbeddingVector> embed_image_batch(const std::vector<Frame>& frames) const override;
  std::vector<EmbeddingVector> embed_text_batch(const std::vector<std::string>& prompts) const override;
  int dimension() const override { return config_.dimension; }

 private:
  struct Impl;
  ProviderConfig config_;
  std::unique_ptr<Impl> impl_;
};

/// Resolves the effective endpoint: ASALPP_EMBED_ENDPOINT wins over config.
std::string resolve_embed_endpoint(const ProviderConfig& config);

}  // namespace asalpp
