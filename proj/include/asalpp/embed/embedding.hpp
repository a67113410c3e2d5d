#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "asalpp/core/frame.hpp"

namespace asalpp {

/// Unit-L2-norm vector in the shared image/text embedding space.
using EmbeddingVector = Eigen::VectorXf;

enum class ProviderKind { kStub, kRemote };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::kStub;
  std::string endpoint;     // remote only; ASALPP_EMBED_ENDPOINT overrides
  int dimension = 512;      // D
  int image_side = 224;     // provider input resolution
  double timeout_seconds = 30.0;
  int retry_limit = 3;
  int max_inflight = 8;     // remote request concurrency bound

  void validate() const;
};

/// Maps images and text into the shared embedding space. Implementations
/// must be safe for concurrent calls and always return unit-norm vectors.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual EmbeddingVector embed_image(const Frame& frame) const = 0;
  virtual EmbeddingVector embed_text(const std::string& prompt) const = 0;

  /// Order-preserving batch; element i equals embed_image(frames[i]).
  virtual std::vector<EmbeddingVector> embed_image_batch(const std::vector<Frame>& frames) const;
  virtual std::vector<EmbeddingVector> embed_text_batch(const std::vector<std::string>& prompts) const;

  virtual int dimension() const = 0;
};

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const ProviderConfig& config);

/// Lowercased (ASCII), whitespace-trimmed copy; the canonical form for text
/// hashing and prompt-distinctness comparisons.
std::string normalize_text(const std::string& text);

}  // namespace asalpp
