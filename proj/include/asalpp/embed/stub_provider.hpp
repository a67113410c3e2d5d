#pragma once

#include "asalpp/embed/embedding.hpp"

namespace asalpp {

/// Deterministic offline provider. Text: case-fold + trim, FNV-hash to a
/// seed, expand to D standard normals, normalize. Images: bilinear resize to
/// image_side, downsample to 16x16x3, then an affine projection by a fixed
/// seeded random D x 768 matrix plus a seeded bias (the bias keeps the
/// all-black frame away from the zero vector), normalized. Reentrant and
/// lock-free after construction.
class StubProvider : public EmbeddingProvider {
 public:
  explicit StubProvider(const ProviderConfig& config);

  EmbeddingVector embed_image(const Frame& frame) const override;
  EmbeddingVector embed_text(const std::string& prompt) const override;
  int dimension() const override { return dim_; }

 private:
  int dim_;
  int image_side_;
  Eigen::MatrixXf projection_;  // D x 768
  Eigen::VectorXf bias_;        // D
};

}  // namespace asalpp
