#include "asalpp/core/http.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "asalpp/core/errors.hpp"
#include "asalpp/embed/embedding.hpp"
#include "asalpp/evolve/evolver.hpp"

using namespace asalpp;
using nlohmann::json;

namespace {

Frame tiny_frame(std::uint8_t fill) {
  Frame f(4, 4);
  for (auto& b : f.rgb) b = fill;
  return f;
}

EvolverRequest make_request(std::vector<std::string> chain_texts, SearchMode mode = SearchMode::kEtt,
                            int iteration = 2) {
  EvolverRequest request;
  request.frames = {tiny_frame(0), tiny_frame(128)};
  request.prompt_chain = PromptChain::from_seed(chain_texts.front());
  for (std::size_t i = 1; i < chain_texts.size(); ++i)
    request.prompt_chain.append(PromptEntry{chain_texts[i], static_cast<int>(i) + 1,
                                            PromptSource::kEvolver, ""});
  request.iteration = iteration;
  request.mode = mode;
  return request;
}

}  // namespace

TEST_CASE("prompt chain invariants") {
  PromptChain chain = PromptChain::from_seed("a microbe");
  CHECK(chain.entries.front().source == PromptSource::kSeed);
  chain.append(PromptEntry{"clusters", 2, PromptSource::kEvolver, "raw"});
  CHECK(chain.newest() == "clusters");
  CHECK_THROWS_AS(chain.append(PromptEntry{"again", 2, PromptSource::kEvolver, ""}), ConfigError);

  PromptChain bad;
  CHECK_THROWS_AS(bad.append(PromptEntry{"x", 1, PromptSource::kEvolver, ""}), ConfigError);
}

TEST_CASE("ETT instruction renders the chain with the fixed wording") {
  EvolverRequest request = make_request({"a microbe", "clusters"});
  std::string instruction = build_instruction(request);
  CHECK(instruction.find("propose the NEXT TARGET PROMPT") != std::string::npos);
  CHECK(instruction.find("ecological niches that have already been explored") != std::string::npos);
  CHECK(instruction.find("'a microbe, clusters'") != std::string::npos);
  CHECK(instruction.find("You are in iteration 2") != std::string::npos);
  CHECK(build_instruction(request) == instruction);
}

TEST_CASE("EST instruction names only the latest prompt") {
  EvolverRequest request = make_request({"a microbe", "clusters"}, SearchMode::kEst);
  // EST callers pass a single-entry chain; mimic that.
  EvolverRequest single = request;
  single.prompt_chain = PromptChain::from_seed("clusters");
  std::string instruction = build_instruction(single);
  CHECK(instruction.find("this prompt:\n'clusters'") != std::string::npos);
  CHECK(instruction.find("a microbe") == std::string::npos);
  CHECK(instruction.find("propose the NEXT TARGET PROMPT") != std::string::npos);
}

TEST_CASE("request validation bounds the frame count") {
  EvolverRequest request = make_request({"seed"});
  request.frames.clear();
  CHECK_THROWS_AS(request.validate(), ConfigError);
  request.frames.assign(17, tiny_frame(1));
  CHECK_THROWS_AS(request.validate(), ConfigError);
  request.frames.assign(16, tiny_frame(1));
  CHECK_NOTHROW(request.validate());
}

TEST_CASE("propose_next: scripted replies, normalization, suffix") {
  ScriptedEvolver backend({"clusters", "microbe motility"});
  EvolverRequest request = make_request({"a microbe"});

  Proposal p = propose_next(request, backend);
  CHECK(p.text == "clusters");
  CHECK(propose_next(request, backend).text == "microbe motility");

  ScriptedEvolver messy({"\n\n  a dying star nebula  \nsecond line ignored\n"});
  Proposal cleaned = propose_next(request, messy);
  CHECK(cleaned.text == "a dying star nebula");
  CHECK(cleaned.text.find('\n') == std::string::npos);
  CHECK(cleaned.raw_model_response.find("second line") != std::string::npos);

  ScriptedEvolver suffixed({"a dying star nebula"});
  request.environment_suffix = "high energy";
  CHECK(propose_next(request, suffixed).text == "a dying star nebula, high energy");
}

TEST_CASE("propose_next retries empty outputs, then fails") {
  ScriptedEvolver blank({"", "  ", "\n"});
  EvolverRequest request = make_request({"seed"});
  CHECK_THROWS_AS(propose_next(request, blank, 2), ProviderError);
  CHECK(blank.calls() == 3);

  ScriptedEvolver late({"", "", "finally"});
  CHECK(propose_next(request, late, 2).text == "finally");
}

TEST_CASE("propose_distinct honors the 10-try rule") {
  EvolverRequest request = make_request({"seed"});

  ScriptedEvolver backend({"a", "a", "b"});
  auto p = propose_distinct(request, backend, {"a"}, 10);
  REQUIRE(p.has_value());
  CHECK(p->text == "b");
  CHECK(backend.calls() == 3);

  ScriptedEvolver repeating({"a"});
  auto none = propose_distinct(request, repeating, {"a"}, 10);
  CHECK(!none.has_value());
  CHECK(repeating.calls() == 10);

  ScriptedEvolver fresh({"new prompt"});
  auto first = propose_distinct(request, fresh, {}, 10);
  REQUIRE(first.has_value());
  CHECK(first->text == "new prompt");
  CHECK(fresh.calls() == 1);

  // Distinctness is case-folded and trimmed.
  ScriptedEvolver shouty({"  CLUSTERS  ", "other"});
  auto other = propose_distinct(request, shouty, {"clusters"}, 10);
  REQUIRE(other.has_value());
  CHECK(other->text == "other");
}

TEST_CASE("scripted backend records every request") {
  ScriptedEvolver backend({"x"});
  EvolverRequest request = make_request({"a microbe", "clusters"});
  propose_next(request, backend);
  REQUIRE(backend.call_log().size() == 1);
  const EvolverCallRecord& record = backend.call_log().front();
  CHECK(record.chain_texts == std::vector<std::string>({"a microbe", "clusters"}));
  CHECK(record.frame_hashes.size() == 2);
  CHECK(record.frame_hashes[0] == frame_hash(tiny_frame(0)));
  CHECK(record.iteration == 2);
  CHECK(record.mode == SearchMode::kEtt);
}

TEST_CASE("remote evolver speaks the documented chat protocol") {
  httplib::Server server;
  json seen_body;
  server.Post("/chat", [&](const httplib::Request& req, httplib::Response& res) {
    seen_body = json::parse(req.body);
    res.set_content(json{{"text", "pulsating bioluminescence\n"}}.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EvolverConfig config;
  config.kind = EvolverConfig::Kind::kRemote;
  config.endpoint = "http://127.0.0.1:" + std::to_string(port);
  config.model = "gemma-3-4b-it";
  config.retry_limit = 0;
  auto backend = make_evolver_backend(config);

  EvolverRequest request = make_request({"a pepperoni pizza"});
  request.temperature = 0.7;
  Proposal p = propose_next(request, *backend);
  CHECK(p.text == "pulsating bioluminescence");

  REQUIRE(seen_body.contains("messages"));
  CHECK(seen_body["model"] == "gemma-3-4b-it");
  CHECK(seen_body["temperature"] == doctest::Approx(0.7));
  const auto& content = seen_body["messages"][0]["content"];
  CHECK(seen_body["messages"][0]["role"] == "user");
  REQUIRE(content.size() == 3);  // instruction + 2 frames
  CHECK(content[0]["type"] == "text");
  CHECK(content[1]["type"] == "image");
  CHECK(content[1].contains("png_base64"));

  server.stop();
  server_thread.join();
}

TEST_CASE("remote evolver fails with ProviderError after retries") {
  httplib::Server server;
  int hits = 0;
  server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EvolverConfig config;
  config.kind = EvolverConfig::Kind::kRemote;
  config.endpoint = "http://127.0.0.1:" + std::to_string(port);
  config.retry_limit = 1;
  auto backend = make_evolver_backend(config);

  EvolverRequest request = make_request({"seed"});
  CHECK_THROWS_AS(propose_next(request, *backend, 0), ProviderError);
  CHECK(hits == 2);

  server.stop();
  server_thread.join();
}
