#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "asalpp/embed/embedding.hpp"
#include "asalpp/evolve/evolver.hpp"
#include "asalpp/metrics/objectives.hpp"
#include "asalpp/metrics/oe.hpp"
#include "asalpp/opt/sep_cmaes.hpp"
#include "asalpp/substrate/lenia.hpp"

namespace asalpp {

struct EsSettings {
  int population = 0;  // 0 -> 4 + floor(3 ln n), min 8
  double sigma0 = 0.3;
  int max_stagnation = 200;
};

struct RunConfig {
  SearchMode mode = SearchMode::kEtt;
  std::string seed_prompt;
  int outer_iterations = 8;    // N
  int inner_iterations = 2000; // I, ES generations per outer iteration
  std::uint64_t run_seed = 0;
  int workers = 0;             // candidate-evaluation threads; 0 -> logical cores
  bool diagnostics = false;    // per-generation 32-frame OE estimate of the generation best
  LeniaConfig substrate;       // rollout_steps T lives here
  EsSettings es;
  ObjectiveSpec objective;
  ProviderConfig embedding;
  EvolverConfig evolver;

  void validate() const;
};

struct GenerationStats {
  int generation = 0;  // 1-based
  double gen_best_loss = 0.0;
  double gen_mean_loss = 0.0;
  double best_loss_so_far = 0.0;
  std::optional<double> diag_oe;  // only with diagnostics enabled
};

struct IterationRecord {
  int iteration = 0;  // 1-based outer index
  PromptChain chain;  // snapshot at optimization time
  ThetaVector warm_start;  // ES mean this iteration started from
  ThetaVector best_theta;
  double best_loss = 0.0;
  std::vector<GenerationStats> loss_curve;
  std::vector<int> checkpoints;        // objective checkpoint step indices
  std::vector<Frame> checkpoint_frames;  // best rollout at those steps
  std::vector<Frame> full_frames;        // best rollout, steps 0..T
  OeSeries oe;                           // over the full best rollout
};

/// Outcome of one inner optimization. When an embedding-provider error
/// aborts the loop mid-iteration, `completed` is false and `checkpoint`
/// holds the ES state after the last finished generation so the run can be
/// resumed.
struct InnerResult {
  bool completed = true;
  IterationRecord record;
  SepCmaEs<double>::Snapshot checkpoint;
  std::string error;
};

/// Runs I generations of sep-CMA-ES over theta from the warm start theta0.
/// EST scores only the newest prompt at the rollout end; ETT scores the full
/// chain at evenly spaced checkpoints. Candidate rollouts run in parallel;
/// embedding calls are batched per generation. The best theta is re-simulated
/// at full resolution for the returned frames and OE series.
InnerResult run_inner(const ThetaVector& theta0, const PromptChain& prompts,
                      const RunConfig& config, const EmbeddingProvider& provider,
                      std::uint64_t es_seed, int iteration_index,
                      const SepCmaEs<double>::Snapshot* resume_from = nullptr);

struct RunResult {
  std::vector<IterationRecord> records;
  PromptChain chain;
  bool truncated = false;         // evolver exhaustion/failure ended the run early
  std::string truncation_reason;
};

/// Where to pick up an interrupted run.
struct ResumePoint {
  int next_iteration = 1;  // 1-based
  PromptChain chain;
  ThetaVector warm_theta;  // empty -> start from zeros
  std::optional<SepCmaEs<double>::Snapshot> es_snapshot;  // mid-iteration state
};

struct RunHooks {
  /// Called after each completed outer iteration.
  std::function<void(const IterationRecord&, const PromptChain&)> on_iteration;
  /// Called when an embedding-provider error aborts an iteration, right
  /// before the error is rethrown; receives the resumable ES checkpoint.
  std::function<void(int iteration, const PromptChain&, const SepCmaEs<double>::Snapshot&)>
      on_abort_checkpoint;
};

/// The outer loop: iteration 1 optimizes the seed prompt; after every
/// iteration but the last, the evolver proposes the next target from the
/// best rollout (appended to the chain; EST keeps optimizing only the newest
/// entry). Theta is warm-started from the previous best. Evolver failure
/// ends the run early with the records so far and the truncated flag set.
RunResult run_asalpp(const RunConfig& config, const EmbeddingProvider& provider,
                     EvolverBackend& evolver, const RunHooks& hooks = {},
                     const ResumePoint* resume = nullptr);

struct RunMetrics {
  std::vector<double> oe_mean;  // per iteration
  std::vector<double> oe_std;
  double delta_oe = 0.0;  // last mean - first mean; 0 with fewer than 2 records
};

RunMetrics evaluate_run(const std::vector<IterationRecord>& records);

/// Initial theta for iteration 1: zeros (decodes to mid-range dynamics and a
/// uniform 0.5 seed patch).
ThetaVector initial_theta(const LeniaConfig& config);

}  // namespace asalpp
