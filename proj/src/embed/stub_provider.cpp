#include "asalpp/embed/stub_provider.hpp"

#include <cctype>

#include "asalpp/core/errors.hpp"
#include "asalpp/core/rng.hpp"

namespace asalpp {

namespace {

constexpr int kPatchSide = 16;
constexpr int kFlatSize = kPatchSide * kPatchSide * 3;  // 768
constexpr std::uint64_t kProjectionSeed = 0x51B0E2F4C3D15A7EULL;

}  // namespace

void ProviderConfig::validate() const {
  if (dimension < 8) throw ConfigError("embedding: dimension must be >= 8");
  if (image_side < 32) throw ConfigError("embedding: image_side must be >= 32");
  if (retry_limit < 0) throw ConfigError("embedding: retry_limit must be >= 0");
}

std::string normalize_text(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  std::string out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i)
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
  return out;
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_image_batch(
    const std::vector<Frame>& frames) const {
  if (frames.empty()) throw ConfigError("embed_image_batch: empty batch");
  std::vector<EmbeddingVector> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    try {
      out.push_back(embed_image(frames[i]));
    } catch (const std::exception& e) {
      throw ProviderError("", 0, "embed_image_batch failed at index " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_text_batch(
    const std::vector<std::string>& prompts) const {
  if (prompts.empty()) throw ConfigError("embed_text_batch: empty batch");
  std::vector<EmbeddingVector> out;
  out.reserve(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    try {
      out.push_back(embed_text(prompts[i]));
    } catch (const std::exception& e) {
      throw ProviderError("", 0, "embed_text_batch failed at index " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

StubProvider::StubProvider(const ProviderConfig& config)
    : dim_(config.dimension), image_side_(config.image_side) {
  config.validate();
  RandomStream stream(kProjectionSeed);
  projection_.resize(dim_, kFlatSize);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < kFlatSize; ++j)
      projection_(i, j) = static_cast<float>(stream.next_normal());
  bias_.resize(dim_);
  for (int i = 0; i < dim_; ++i) bias_[i] = static_cast<float>(stream.next_normal());
}

EmbeddingVector StubProvider::embed_image(const Frame& frame) const {
  if (frame.width <= 0 || frame.height <= 0) throw ConfigError("embed_image: empty frame");
  Frame sized = resize_bilinear(frame, image_side_, image_side_);
  Frame small = resize_bilinear(sized, kPatchSide, kPatchSide);
  Eigen::VectorXf flat(kFlatSize);
  for (int i = 0; i < kFlatSize; ++i) flat[i] = static_cast<float>(small.rgb[static_cast<std::size_t>(i)]) / 255.0f;
  EmbeddingVector e = projection_ * flat + bias_;
  float norm = e.norm();
  if (norm <= 0.0f) throw NumericFault("embed_image: degenerate projection");
  return e / norm;
}

EmbeddingVector StubProvider::embed_text(const std::string& prompt) const {
  std::string canon = normalize_text(prompt);
  if (canon.empty()) throw ConfigError("embed_text: empty prompt");
  RandomStream stream(fnv1a64(canon));
  EmbeddingVector e(dim_);
  for (int i = 0; i < dim_; ++i) e[i] = static_cast<float>(stream.next_normal());
  float norm = e.norm();
  if (norm <= 0.0f) throw NumericFault("embed_text: degenerate embedding");
  return e / norm;
}

}  // namespace asalpp
