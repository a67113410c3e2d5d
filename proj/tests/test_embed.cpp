#include "asalpp/core/http.hpp"

#include <doctest.h>

#include <atomic>
#include <nlohmann/json.hpp>
#include <thread>

#include "asalpp/core/base64.hpp"
#include "asalpp/core/errors.hpp"
#include "asalpp/embed/remote_provider.hpp"
#include "asalpp/embed/stub_provider.hpp"
#include "asalpp/io/png_codec.hpp"
#include "asalpp/metrics/objectives.hpp"

using namespace asalpp;
using nlohmann::json;

namespace {

Frame solid_frame(int side, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Frame f(side, side);
  for (int i = 0; i < side * side; ++i) {
    f.rgb[static_cast<std::size_t>(3 * i)] = r;
    f.rgb[static_cast<std::size_t>(3 * i + 1)] = g;
    f.rgb[static_cast<std::size_t>(3 * i + 2)] = b;
  }
  return f;
}

ProviderConfig stub_config(int dim = 64) {
  ProviderConfig c;
  c.kind = ProviderKind::kStub;
  c.dimension = dim;
  c.image_side = 64;
  return c;
}

}  // namespace

TEST_CASE("stub text embeddings: determinism, case folding, norms") {
  StubProvider provider(stub_config());

  EmbeddingVector a = provider.embed_text("a microbe");
  EmbeddingVector b = provider.embed_text("a microbe");
  CHECK(a == b);
  CHECK(provider.embed_text("a MICROBE") == a);
  CHECK(provider.embed_text("  a microbe \n") == a);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(provider.embed_text("   "), ConfigError);

  // The nine seed prompts stay well separated in the stub space.
  std::vector<std::string> prompts{"a pepperoni pizza",  "a slime mould", "a flower",
                                   "the garden of eden", "an extraterrestrial life",
                                   "a monkey",           "a caterpillar", "a microbe",
                                   "a fungus"};
  std::vector<EmbeddingVector> embedded;
  for (const auto& p : prompts) embedded.push_back(provider.embed_text(p));
  for (std::size_t i = 0; i < embedded.size(); ++i)
    for (std::size_t j = i + 1; j < embedded.size(); ++j)
      CHECK(std::abs(cosine(embedded[i], embedded[j])) < 0.5);
}

TEST_CASE("stub image embeddings: determinism, norm, separation") {
  StubProvider provider(stub_config());
  Frame black = solid_frame(32, 0, 0, 0);
  Frame white = solid_frame(32, 255, 255, 255);

  EmbeddingVector e_black = provider.embed_image(black);
  CHECK(provider.embed_image(black) == e_black);
  CHECK(e_black.norm() == doctest::Approx(1.0).epsilon(1e-6));

  EmbeddingVector e_white = provider.embed_image(white);
  CHECK(e_white.norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cosine(e_black, e_white) < 0.99);
}

TEST_CASE("embedding batches preserve order and match single calls") {
  StubProvider provider(stub_config());
  std::vector<Frame> frames;
  for (int i = 0; i < 8; ++i)
    frames.push_back(solid_frame(16, static_cast<std::uint8_t>(32 * i), 10, 200));

  auto batch = provider.embed_image_batch(frames);
  REQUIRE(batch.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) REQUIRE(batch[i] == provider.embed_image(frames[i]));

  std::vector<Frame> reversed(frames.rbegin(), frames.rend());
  auto reversed_batch = provider.embed_image_batch(reversed);
  for (std::size_t i = 0; i < frames.size(); ++i)
    REQUIRE(reversed_batch[i] == batch[frames.size() - 1 - i]);

  auto single = provider.embed_image_batch({frames[0]});
  REQUIRE(single.size() == 1);
  CHECK(single[0] == batch[0]);

  std::vector<Frame> sixty_four(64, frames[0]);
  auto big = provider.embed_image_batch(sixty_four);
  for (const auto& e : big) REQUIRE(e == big[0]);

  CHECK_THROWS(provider.embed_image_batch({}));

  // An element failure fails the batch naming the first bad index.
  std::vector<Frame> with_bad = frames;
  with_bad.insert(with_bad.begin() + 3, Frame{});
  try {
    provider.embed_image_batch(with_bad);
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(std::string(e.what()).find("index 3") != std::string::npos);
  }
}

TEST_CASE("remote provider speaks the documented wire protocol") {
  const int dim = 16;
  httplib::Server server;
  std::atomic<int> image_requests{0};

  server.Post("/v1/embed_text", [&](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body);
    REQUIRE(body.contains("texts"));
    json embeddings = json::array();
    for (const auto& text : body["texts"]) {
      std::vector<double> v(dim, 0.0);
      v[text.get<std::string>().size() % dim] = 1.0;
      embeddings.push_back(v);
    }
    res.set_content(json{{"embeddings", embeddings}, {"dim", dim}}.dump(), "application/json");
  });
  server.Post("/v1/embed_image", [&](const httplib::Request& req, httplib::Response& res) {
    ++image_requests;
    json body = json::parse(req.body);
    REQUIRE(body.contains("images_png_base64"));
    json embeddings = json::array();
    for (const auto& b64 : body["images_png_base64"]) {
      // Round-trip the PNG to prove the payload is a real image.
      std::string encoded = b64.get<std::string>();
      REQUIRE(!encoded.empty());
      std::vector<double> v(dim, 0.0);
      v[0] = 1.0;
      v[1] = static_cast<double>(encoded.size() % 7);
      embeddings.push_back(v);
    }
    res.set_content(json{{"embeddings", embeddings}, {"dim", dim}}.dump(), "application/json");
  });

  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ProviderConfig config;
  config.kind = ProviderKind::kRemote;
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  config.dimension = dim;
  config.image_side = 32;
  config.retry_limit = 1;
  RemoteProvider provider(config);

  EmbeddingVector t = provider.embed_text("hello");
  CHECK(t.size() == dim);
  CHECK(t.norm() == doctest::Approx(1.0).epsilon(1e-5));

  auto images = provider.embed_image_batch({solid_frame(16, 1, 2, 3), solid_frame(16, 9, 9, 9)});
  CHECK(images.size() == 2);
  CHECK(image_requests.load() == 1);  // one batched request

  server.stop();
  server_thread.join();
}

TEST_CASE("remote provider surfaces endpoint and status after retries") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/embed_text", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ProviderConfig config;
  config.kind = ProviderKind::kRemote;
  config.endpoint = "http://127.0.0.1:" + std::to_string(port);
  config.dimension = 16;
  config.retry_limit = 2;
  RemoteProvider provider(config);

  try {
    provider.embed_text("x");
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.status() == 503);
    CHECK(e.endpoint() == config.endpoint);
  }
  CHECK(hits.load() == 3);  // initial try + 2 retries

  server.stop();
  server_thread.join();
}

TEST_CASE("ASALPP_EMBED_ENDPOINT overrides the configured endpoint") {
  ProviderConfig config;
  config.endpoint = "http://configured:1";
  setenv("ASALPP_EMBED_ENDPOINT", "http://from-env:2", 1);
  CHECK(resolve_embed_endpoint(config) == "http://from-env:2");
  unsetenv("ASALPP_EMBED_ENDPOINT");
  CHECK(resolve_embed_endpoint(config) == "http://configured:1");
}

TEST_CASE("provider config validation") {
  ProviderConfig config;
  config.dimension = 4;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = ProviderConfig{};
  config.image_side = 8;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = ProviderConfig{};
  config.kind = ProviderKind::kRemote;
  config.endpoint.clear();
  unsetenv("ASALPP_EMBED_ENDPOINT");
  CHECK_THROWS_WITH_AS(RemoteProvider{config},
                       doctest::Contains("ASALPP_EMBED_ENDPOINT"), ConfigError);
}
