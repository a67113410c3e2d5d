#include "asalpp/evolve/evolver.hpp"

#include "asalpp/core/http.hpp"

#include <chrono>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "asalpp/core/base64.hpp"
#include "asalpp/core/errors.hpp"
#include "asalpp/embed/embedding.hpp"
#include "asalpp/io/png_codec.hpp"

namespace asalpp {

PromptChain PromptChain::from_seed(const std::string& seed_text) {
  PromptChain chain;
  chain.entries.push_back(PromptEntry{seed_text, 1, PromptSource::kSeed, ""});
  return chain;
}

void PromptChain::append(PromptEntry entry) {
  if (entries.empty() && entry.source != PromptSource::kSeed)
    throw ConfigError("prompt chain: first entry must be the seed");
  if (!entries.empty() && entry.iteration <= entries.back().iteration)
    throw ConfigError("prompt chain: iterations must be strictly increasing");
  entries.push_back(std::move(entry));
}

std::vector<std::string> PromptChain::texts() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.text);
  return out;
}

const std::string& PromptChain::newest() const {
  if (entries.empty()) throw ConfigError("prompt chain: empty");
  return entries.back().text;
}

void EvolverRequest::validate() const {
  if (frames.empty() || frames.size() > 16)
    throw ConfigError("evolver request: frame count must lie in [1, 16]");
  if (prompt_chain.empty()) throw ConfigError("evolver request: prompt chain must not be empty");
  if (temperature < 0.0) throw ConfigError("evolver request: temperature must be >= 0");
}

void EvolverConfig::validate() const {
  if (kind == Kind::kScripted && script.empty())
    throw ConfigError("scripted evolver: script must not be empty");
  if (frames_per_request < 1 || frames_per_request > 16)
    throw ConfigError("evolver: frames_per_request must lie in [1, 16]");
  if (retry_limit < 0) throw ConfigError("evolver: retry_limit must be >= 0");
}

std::string build_instruction(const EvolverRequest& request) {
  request.validate();
  std::ostringstream out;
  if (request.mode == SearchMode::kEtt) {
    out << "This artificial life simulation has been optimised to follow this sequence of "
           "prompts:\n'";
    const auto texts = request.prompt_chain.texts();
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (i > 0) out << ", ";
      out << texts[i];
    }
    out << "'.\n\n";
  } else {
    out << "This artificial life simulation has been optimised to follow this prompt:\n'"
        << request.prompt_chain.newest() << "'.\n\n";
  }
  out << "Consider these as constraints: ecological niches that have already been explored.\n\n"
         "You are in iteration "
      << request.iteration
      << ". Your task is to propose the NEXT TARGET PROMPT to determine the next stage of "
         "evolution. This is an opportunity to propose a direction that is significantly "
         "different from the past, but leads to interesting lifelike behaviour. Can we recreate "
         "open-ended evolution of life? Be bold and creative! ONLY output the new target prompt "
         "string, and be concise. Avoid using too many adjectives.\n\n"
         "NEXT TARGET PROMPT:";
  return out.str();
}

ScriptedEvolver::ScriptedEvolver(std::vector<std::string> script, bool repeat_last_when_exhausted)
    : script_(std::move(script)), repeat_last_(repeat_last_when_exhausted) {
  if (script_.empty()) throw ConfigError("scripted evolver: script must not be empty");
}

std::string ScriptedEvolver::complete(const EvolverRequest& request, const std::string& instruction) {
  std::lock_guard<std::mutex> lock(mutex_);
  EvolverCallRecord record;
  record.instruction = instruction;
  record.chain_texts = request.prompt_chain.texts();
  record.frame_hashes.reserve(request.frames.size());
  for (const auto& f : request.frames) record.frame_hashes.push_back(frame_hash(f));
  record.iteration = request.iteration;
  record.temperature = request.temperature;
  record.mode = request.mode;
  record.environment_suffix = request.environment_suffix;
  call_log_.push_back(std::move(record));

  if (next_ < script_.size()) return script_[next_++];
  if (repeat_last_) return script_.back();
  throw ProviderError("scripted", 0, "scripted evolver: script exhausted");
}

namespace {

std::string first_nonempty_line_trimmed(const std::string& raw) {
  std::istringstream in(raw);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t begin = line.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) continue;
    std::size_t end = line.find_last_not_of(" \t\r\n");
    return line.substr(begin, end - begin + 1);
  }
  return "";
}

/// Remote chat backend speaking the project wire protocol:
///   POST {endpoint}/chat
///   {"model":..., "temperature":..., "messages":[{"role":"user","content":
///     [{"type":"text","text":...}, {"type":"image","png_base64":...}, ...]}]}
///   -> {"text": ...}
class RemoteEvolver : public EvolverBackend {
 public:
  explicit RemoteEvolver(const EvolverConfig& config) : config_(config) {
    endpoint_ = resolve_evolver_endpoint(config);
    if (endpoint_.empty())
      throw ConfigError(
          "remote evolver needs an endpoint: set evolver.endpoint or ASALPP_EVOLVER_ENDPOINT");
    auto scheme = endpoint_.find("://");
    std::size_t path_start = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = endpoint_.find('/', path_start);
    std::string base = endpoint_;
    if (slash != std::string::npos) {
      base = endpoint_.substr(0, slash);
      path_prefix_ = endpoint_.substr(slash);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
    client_ = std::make_unique<httplib::Client>(base);
    auto timeout = std::chrono::duration<double>(config.timeout_seconds);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(timeout);
    client_->set_connection_timeout(ms);
    client_->set_read_timeout(ms);
    client_->set_write_timeout(ms);
  }

  std::string complete(const EvolverRequest& request, const std::string& instruction) override {
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", instruction}});
    for (const auto& frame : request.frames)
      content.push_back({{"type", "image"}, {"png_base64", base64_encode(png_encode(frame))}});
    nlohmann::json body = {
        {"model", config_.model},
        {"temperature", request.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};

    std::string payload = body.dump();
    int last_status = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
      auto res = client_->Post((path_prefix_ + "/chat").c_str(), payload, "application/json");
      if (!res) {
        last_status = 0;
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      last_status = res->status;
      if (res->status == 200) {
        try {
          auto parsed = nlohmann::json::parse(res->body);
          return parsed.at("text").get<std::string>();
        } catch (const std::exception& e) {
          throw ProviderError(endpoint_, res->status, std::string("invalid chat response: ") + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status);
    }
    throw ProviderError(endpoint_, last_status,
                        "chat request to " + endpoint_ + " failed after " +
                            std::to_string(config_.retry_limit + 1) + " attempts (" + last_error + ")");
  }

 private:
  EvolverConfig config_;
  std::string endpoint_;
  std::string path_prefix_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

std::string resolve_evolver_endpoint(const EvolverConfig& config) {
  if (const char* env = std::getenv("ASALPP_EVOLVER_ENDPOINT"); env && *env) return env;
  return config.endpoint;
}

std::unique_ptr<EvolverBackend> make_evolver_backend(const EvolverConfig& config) {
  config.validate();
  if (config.kind == EvolverConfig::Kind::kRemote) return std::make_unique<RemoteEvolver>(config);
  return std::make_unique<ScriptedEvolver>(config.script);
}

Proposal propose_next(const EvolverRequest& request, EvolverBackend& backend, int retry_limit) {
  request.validate();
  const std::string instruction = build_instruction(request);
  std::string proposal;
  std::string raw;
  for (int attempt = 0; attempt <= retry_limit; ++attempt) {
    raw = backend.complete(request, instruction);
    proposal = first_nonempty_line_trimmed(raw);
    if (!proposal.empty()) break;
  }
  if (proposal.empty())
    throw ProviderError("", 0, "evolver returned empty output after " +
                                   std::to_string(retry_limit + 1) + " attempts");
  if (request.environment_suffix && !request.environment_suffix->empty())
    proposal += ", " + *request.environment_suffix;
  return Proposal{proposal, raw};
}

std::optional<Proposal> propose_distinct(const EvolverRequest& request, EvolverBackend& backend,
                                         const std::set<std::string>& existing, int max_tries,
                                         int retry_limit) {
  if (max_tries < 1) throw ConfigError("propose_distinct: max_tries must be >= 1");
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    Proposal p = propose_next(request, backend, retry_limit);
    if (existing.find(normalize_text(p.text)) == existing.end()) return p;
  }
  return std::nullopt;
}

}  // namespace asalpp
