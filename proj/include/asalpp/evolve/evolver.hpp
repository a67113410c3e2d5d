#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "asalpp/core/frame.hpp"

namespace asalpp {

enum class SearchMode { kEst, kEtt };

enum class PromptSource { kSeed, kEvolver, kEvolverEnvironment };

struct PromptEntry {
  std::string text;
  int iteration = 0;  // outer iteration in which this prompt became a target (1-based)
  PromptSource source = PromptSource::kSeed;
  std::string raw_model_response;
};

/// Ordered target prompts accumulated across outer iterations. Entry 0 is
/// always the seed; iterations are strictly increasing.
struct PromptChain {
  std::vector<PromptEntry> entries;

  static PromptChain from_seed(const std::string& seed_text);
  void append(PromptEntry entry);

  std::vector<std::string> texts() const;
  const std::string& newest() const;
  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

struct EvolverRequest {
  std::vector<Frame> frames;  // subsampled rollout video, 1..16 frames
  PromptChain prompt_chain;   // full chain (ETT) or just the latest prompt (EST)
  int iteration = 1;
  double temperature = 0.7;
  SearchMode mode = SearchMode::kEtt;
  std::optional<std::string> environment_suffix;

  void validate() const;
};

/// Chat backend surface. Implementations receive the rendered instruction
/// and the request (for logging / media access) and return the raw model
/// text.
class EvolverBackend {
 public:
  virtual ~EvolverBackend() = default;
  virtual std::string complete(const EvolverRequest& request, const std::string& instruction) = 0;
};

struct EvolverCallRecord {
  std::string instruction;
  std::vector<std::string> chain_texts;
  std::vector<std::uint64_t> frame_hashes;
  int iteration = 0;
  double temperature = 0.0;
  SearchMode mode = SearchMode::kEtt;
  std::optional<std::string> environment_suffix;
};

/// Deterministic backend replaying a fixed script. When the script runs out
/// it keeps repeating the last entry (or fails, if configured). Every call
/// is recorded so tests can assert exactly which frames and chains were sent.
class ScriptedEvolver : public EvolverBackend {
 public:
  explicit ScriptedEvolver(std::vector<std::string> script, bool repeat_last_when_exhausted = true);

  std::string complete(const EvolverRequest& request, const std::string& instruction) override;

  const std::vector<EvolverCallRecord>& call_log() const { return call_log_; }
  std::size_t calls() const { return call_log_.size(); }

 private:
  std::vector<std::string> script_;
  bool repeat_last_;
  std::size_t next_ = 0;
  std::vector<EvolverCallRecord> call_log_;
  std::mutex mutex_;
};

struct EvolverConfig {
  enum class Kind { kScripted, kRemote };
  Kind kind = Kind::kScripted;
  std::vector<std::string> script;  // scripted backend
  std::string endpoint;             // remote; ASALPP_EVOLVER_ENDPOINT overrides
  std::string model = "gemma-3-4b-it";
  double temperature = 0.7;
  double timeout_seconds = 60.0;
  int retry_limit = 3;
  int frames_per_request = 8;

  void validate() const;
};

std::unique_ptr<EvolverBackend> make_evolver_backend(const EvolverConfig& config);
std::string resolve_evolver_endpoint(const EvolverConfig& config);

/// Renders the instruction for the backend. ETT interpolates the full chain
/// joined by ", "; EST names only the latest prompt. The environment suffix
/// is applied to the returned proposal downstream, never to the instruction.
std::string build_instruction(const EvolverRequest& request);

struct Proposal {
  std::string text;                // normalized proposal (suffix applied)
  std::string raw_model_response;  // untouched backend output
};

/// Asks the backend for the next target prompt: takes the first non-empty
/// line of the response, trims it, retries empty outputs up to retry_limit,
/// then appends ", {environment_suffix}" when one is present.
Proposal propose_next(const EvolverRequest& request, EvolverBackend& backend, int retry_limit = 3);

/// Repeats propose_next until the case-folded trimmed proposal is absent
/// from `existing`; gives up (nullopt) after max_tries attempts.
std::optional<Proposal> propose_distinct(const EvolverRequest& request, EvolverBackend& backend,
                                         const std::set<std::string>& existing, int max_tries = 10,
                                         int retry_limit = 3);

}  // namespace asalpp
