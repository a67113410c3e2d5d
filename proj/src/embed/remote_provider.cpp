#include "asalpp/embed/remote_provider.hpp"

#include "asalpp/core/http.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <nlohmann/json.hpp>
#include <semaphore>
#include <thread>

#include "asalpp/core/base64.hpp"
#include "asalpp/core/errors.hpp"
#include "asalpp/embed/stub_provider.hpp"
#include "asalpp/io/png_codec.hpp"

namespace asalpp {

namespace {

using nlohmann::json;

/// Splits "http://host:port/prefix" into the client base and path prefix.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  auto scheme = endpoint.find("://");
  std::size_t path_start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = endpoint.find('/', path_start);
  if (slash == std::string::npos) return {endpoint, ""};
  std::string prefix = endpoint.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {endpoint.substr(0, slash), prefix};
}

}  // namespace

std::string resolve_embed_endpoint(const ProviderConfig& config) {
  if (const char* env = std::getenv("ASALPP_EMBED_ENDPOINT"); env && *env) return env;
  return config.endpoint;
}

struct RemoteProvider::Impl {
  Impl(const std::string& endpoint, const ProviderConfig& config)
      : endpoint_full(endpoint),
        inflight(std::clamp(config.max_inflight, 1, 256)),
        retry_limit(config.retry_limit) {
    auto [base, prefix] = split_endpoint(endpoint);
    path_prefix = prefix;
    client = std::make_unique<httplib::Client>(base);
    auto timeout = std::chrono::duration<double>(config.timeout_seconds);
    client->set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client->set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client->set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
  }

  json post(const std::string& path, const json& body) const {
    std::string payload = body.dump();
    int last_status = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= retry_limit; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
      inflight.acquire();
      auto res = client->Post((path_prefix + path).c_str(), payload, "application/json");
      inflight.release();
      if (!res) {
        last_status = 0;
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      last_status = res->status;
      if (res->status == 200) {
        try {
          return json::parse(res->body);
        } catch (const json::parse_error& e) {
          throw ProviderError(endpoint_full, res->status, std::string("invalid JSON response: ") + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status);
    }
    throw ProviderError(endpoint_full, last_status,
                        "request to " + endpoint_full + path + " failed after " +
                            std::to_string(retry_limit + 1) + " attempts (" + last_error + ")");
  }

  std::string endpoint_full;
  std::string path_prefix;
  std::unique_ptr<httplib::Client> client;
  mutable std::counting_semaphore<256> inflight;
  int retry_limit;
};

RemoteProvider::RemoteProvider(const ProviderConfig& config) : config_(config) {
  config_.validate();
  std::string endpoint = resolve_embed_endpoint(config);
  if (endpoint.empty())
    throw ConfigError(
        "remote embedding provider needs an endpoint: set embedding.endpoint or "
        "ASALPP_EMBED_ENDPOINT");
  impl_ = std::make_unique<Impl>(endpoint, config_);
}

RemoteProvider::~RemoteProvider() = default;

namespace {

std::vector<EmbeddingVector> parse_embeddings(const nlohmann::json& response, int expected_dim,
                                              std::size_t expected_count,
                                              const std::string& endpoint) {
  if (!response.contains("embeddings") || !response["embeddings"].is_array())
    throw ProviderError(endpoint, 200, "response missing \"embeddings\" array");
  const auto& rows = response["embeddings"];
  if (rows.size() != expected_count)
    throw ProviderError(endpoint, 200,
                        "expected " + std::to_string(expected_count) + " embeddings, got " +
                            std::to_string(rows.size()));
  std::vector<EmbeddingVector> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    EmbeddingVector e(static_cast<Eigen::Index>(row.size()));
    Eigen::Index i = 0;
    for (const auto& v : row) e[i++] = v.get<float>();
    if (expected_dim > 0 && e.size() != expected_dim)
      throw ProviderError(endpoint, 200, "embedding dimension mismatch");
    float norm = e.norm();
    if (!(norm > 0.0f) || !std::isfinite(norm))
      throw ProviderError(endpoint, 200, "non-normalizable embedding in response");
    out.push_back(e / norm);
  }
  return out;
}

}  // namespace

std::vector<EmbeddingVector> RemoteProvider::embed_text_batch(
    const std::vector<std::string>& prompts) const {
  if (prompts.empty()) throw ConfigError("embed_text_batch: empty batch");
  nlohmann::json body;
  body["texts"] = nlohmann::json::array();
  for (const auto& p : prompts) {
    if (normalize_text(p).empty()) throw ConfigError("embed_text: empty prompt");
    body["texts"].push_back(p);
  }
  auto response = impl_->post("/embed_text", body);
  return parse_embeddings(response, config_.dimension, prompts.size(), impl_->endpoint_full);
}

std::vector<EmbeddingVector> RemoteProvider::embed_image_batch(const std::vector<Frame>& frames) const {
  if (frames.empty()) throw ConfigError("embed_image_batch: empty batch");
  nlohmann::json body;
  body["images_png_base64"] = nlohmann::json::array();
  for (const auto& f : frames) {
    Frame sized = resize_bilinear(f, config_.image_side, config_.image_side);
    body["images_png_base64"].push_back(base64_encode(png_encode(sized)));
  }
  auto response = impl_->post("/embed_image", body);
  return parse_embeddings(response, config_.dimension, frames.size(), impl_->endpoint_full);
}

EmbeddingVector RemoteProvider::embed_text(const std::string& prompt) const {
  return embed_text_batch({prompt}).front();
}

EmbeddingVector RemoteProvider::embed_image(const Frame& frame) const {
  return embed_image_batch({frame}).front();
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const ProviderConfig& config) {
  config.validate();
  if (config.kind == ProviderKind::kRemote) return std::make_unique<RemoteProvider>(config);
  return std::make_unique<StubProvider>(config);
}

}  // namespace asalpp
