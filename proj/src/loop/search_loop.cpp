#include "asalpp/loop/search_loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "asalpp/core/errors.hpp"
#include "asalpp/core/parallel.hpp"

namespace asalpp {

void RunConfig::validate() const {
  if (seed_prompt.empty()) throw ConfigError("run: seed_prompt must not be empty");
  if (outer_iterations < 1) throw ConfigError("run: outer_iterations must be >= 1");
  if (inner_iterations < 1) throw ConfigError("run: inner_iterations must be >= 1");
  if (substrate.rollout_steps < outer_iterations)
    throw ConfigError("run: rollout_steps must be >= outer_iterations so temporal checkpoints fit");
  substrate.validate();
  objective.validate();
  embedding.validate();
  evolver.validate();
  if (!(es.sigma0 > 0.0)) throw ConfigError("run: es.sigma0 must be > 0");
}

ThetaVector initial_theta(const LeniaConfig& config) {
  return ThetaVector::Zero(config.theta_length());
}

namespace {

struct CandidateEval {
  double loss = std::numeric_limits<double>::infinity();
  std::vector<Frame> checkpoint_frames;
  bool faulted = false;
};

ThetaVector to_theta(const Eigen::VectorXd& x) { return x.cast<float>(); }

/// Rollouts for every candidate in parallel, then one batched embedding call,
/// then per-candidate losses. Numeric faults rank the candidate worst
/// instead of killing the generation.
std::vector<CandidateEval> evaluate_candidates(const std::vector<Eigen::VectorXd>& candidates,
                                               const std::vector<int>& checkpoints,
                                               const std::vector<EmbeddingVector>& prompt_embeddings,
                                               const RunConfig& config,
                                               const EmbeddingProvider& provider) {
  const int count = static_cast<int>(candidates.size());
  std::vector<CandidateEval> evals(static_cast<std::size_t>(count));

  parallel_for(count, config.workers, [&](int i) {
    auto& eval = evals[static_cast<std::size_t>(i)];
    try {
      Rollout r = rollout(to_theta(candidates[static_cast<std::size_t>(i)]), config.substrate,
                          checkpoints);
      eval.checkpoint_frames = std::move(r.frames);
      eval.faulted = false;
    } catch (const NumericFault&) {
      eval.faulted = true;
    }
  });

  // One flat batch in candidate order keeps provider round-trips amortized
  // and the gather deterministic.
  std::vector<Frame> batch;
  batch.reserve(static_cast<std::size_t>(count) * checkpoints.size());
  for (const auto& eval : evals)
    if (!eval.faulted)
      batch.insert(batch.end(), eval.checkpoint_frames.begin(), eval.checkpoint_frames.end());

  std::vector<EmbeddingVector> embedded;
  if (!batch.empty()) embedded = provider.embed_image_batch(batch);

  std::size_t cursor = 0;
  for (auto& eval : evals) {
    if (eval.faulted) continue;
    std::vector<EmbeddingVector> frame_embeddings(
        embedded.begin() + static_cast<std::ptrdiff_t>(cursor),
        embedded.begin() + static_cast<std::ptrdiff_t>(cursor + eval.checkpoint_frames.size()));
    cursor += eval.checkpoint_frames.size();

    if (config.mode == SearchMode::kEst) {
      eval.loss = -score_single_target(frame_embeddings.back(), prompt_embeddings.back());
    } else {
      SimilarityMatrix sim = similarity_matrix(frame_embeddings, prompt_embeddings);
      eval.loss = -score_temporal(sim, config.objective.softmax_coefficient,
                                  config.objective.softmax_sharpness,
                                  config.objective.checkpoints_per_prompt);
    }
  }
  return evals;
}

std::vector<Frame> full_rollout_frames(const ThetaVector& theta, const LeniaConfig& substrate) {
  std::vector<int> all(static_cast<std::size_t>(substrate.rollout_steps) + 1);
  for (int t = 0; t <= substrate.rollout_steps; ++t) all[static_cast<std::size_t>(t)] = t;
  return rollout(theta, substrate, all).frames;
}

}  // namespace

InnerResult run_inner(const ThetaVector& theta0, const PromptChain& prompts,
                      const RunConfig& config, const EmbeddingProvider& provider,
                      std::uint64_t es_seed, int iteration_index,
                      const SepCmaEs<double>::Snapshot* resume_from) {
  config.validate();
  if (prompts.empty()) throw ConfigError("run_inner: prompt chain must not be empty");

  const int prompt_count = static_cast<int>(prompts.size());
  std::vector<int> checkpoints =
      config.mode == SearchMode::kEst
          ? select_checkpoints(ObjectiveMode::kSingle, 1, config.substrate.rollout_steps)
          : select_checkpoints(ObjectiveMode::kTemporal, prompt_count,
                               config.substrate.rollout_steps,
                               config.objective.checkpoints_per_prompt);

  SepCmaEsConfig es_config;
  es_config.dimension = config.substrate.theta_length();
  es_config.population = config.es.population;
  es_config.sigma0 = config.es.sigma0;
  es_config.seed = es_seed;
  es_config.max_stagnation = config.es.max_stagnation;

  if (theta0.size() != es_config.dimension)
    throw ConfigError("run_inner: warm-start theta length does not match substrate");
  SepCmaEs<double> es(es_config, theta0.cast<double>());
  if (resume_from) es.restore(*resume_from);

  InnerResult result;
  IterationRecord& record = result.record;
  record.iteration = iteration_index;
  record.chain = prompts;
  record.warm_start = theta0;
  record.checkpoints = checkpoints;

  // EST optimizes only the newest prompt; ETT the whole chain.
  std::vector<std::string> active_prompts =
      config.mode == SearchMode::kEst ? std::vector<std::string>{prompts.newest()} : prompts.texts();
  std::vector<EmbeddingVector> prompt_embeddings;
  try {
    prompt_embeddings = provider.embed_text_batch(active_prompts);
  } catch (const ProviderError& e) {
    result.completed = false;
    result.checkpoint = es.snapshot();
    result.error = e.what();
    return result;
  }

  for (int gen = es.generation(); gen < config.inner_iterations; ++gen) {
    std::vector<Eigen::VectorXd> candidates = es.ask();
    std::vector<CandidateEval> evals;
    try {
      evals = evaluate_candidates(candidates, checkpoints, prompt_embeddings, config, provider);
    } catch (const ProviderError& e) {
      result.completed = false;
      result.checkpoint = es.snapshot();
      result.error = e.what();
      return result;
    }

    std::vector<double> losses(candidates.size());
    for (std::size_t i = 0; i < evals.size(); ++i) losses[i] = evals[i].loss;
    es.tell(candidates, losses);

    GenerationStats stats;
    stats.generation = es.generation();
    double best = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    int finite = 0;
    for (double l : losses) {
      if (!std::isfinite(l)) continue;
      best = std::min(best, l);
      sum += l;
      ++finite;
    }
    stats.gen_best_loss = best;
    stats.gen_mean_loss = finite > 0 ? sum / finite : std::numeric_limits<double>::quiet_NaN();
    stats.best_loss_so_far = es.best_loss();

    if (config.diagnostics && std::isfinite(es.best_loss())) {
      // Cheap in-loop novelty estimate: 32 evenly spaced frames of the
      // incumbent best rollout.
      try {
        std::vector<int> thin =
            evenly_spaced_indices(config.substrate.rollout_steps + 1, 32);
        Rollout diag = rollout(es.best_theta().cast<float>(), config.substrate, thin);
        stats.diag_oe = oe_score(provider.embed_image_batch(diag.frames)).mean;
      } catch (const NumericFault&) {
        // Diagnostics never abort the loop.
      }
    }
    record.loss_curve.push_back(stats);

    if (es.stagnated()) break;
  }

  record.best_theta = es.best_theta().cast<float>();
  record.best_loss = es.best_loss();

  // Re-simulate the winner at full resolution for artifacts, the evolver
  // video and the OE series.
  record.full_frames = full_rollout_frames(record.best_theta, config.substrate);
  record.checkpoint_frames.clear();
  for (int step_index : checkpoints)
    record.checkpoint_frames.push_back(record.full_frames[static_cast<std::size_t>(step_index)]);
  try {
    record.oe = oe_score(provider.embed_image_batch(record.full_frames));
  } catch (const ProviderError& e) {
    result.completed = false;
    result.checkpoint = es.snapshot();
    result.error = e.what();
    return result;
  }
  return result;
}

RunResult run_asalpp(const RunConfig& config, const EmbeddingProvider& provider,
                     EvolverBackend& evolver, const RunHooks& hooks, const ResumePoint* resume) {
  config.validate();

  RunResult result;
  int start_iteration = 1;
  ThetaVector warm = initial_theta(config.substrate);
  const SepCmaEs<double>::Snapshot* mid_iteration = nullptr;

  if (resume) {
    start_iteration = resume->next_iteration;
    result.chain = resume->chain;
    if (resume->warm_theta.size() > 0) warm = resume->warm_theta;
    if (resume->es_snapshot) mid_iteration = &*resume->es_snapshot;
  } else {
    result.chain = PromptChain::from_seed(config.seed_prompt);
  }

  for (int n = start_iteration; n <= config.outer_iterations; ++n) {
    std::uint64_t es_seed = mix64(config.run_seed, static_cast<std::uint64_t>(n));
    InnerResult inner = run_inner(warm, result.chain, config, provider, es_seed, n, mid_iteration);
    mid_iteration = nullptr;
    if (!inner.completed) {
      if (hooks.on_abort_checkpoint) hooks.on_abort_checkpoint(n, result.chain, inner.checkpoint);
      throw ProviderError("", 0, "iteration " + std::to_string(n) +
                                     " aborted by provider error: " + inner.error);
    }

    result.records.push_back(std::move(inner.record));
    const IterationRecord& record = result.records.back();
    warm = record.best_theta;

    if (n < config.outer_iterations) {
      // Propose the next target from the best rollout just found. Extending
      // the chain before the iteration hook lets checkpoints capture the
      // exact state the next iteration needs.
      EvolverRequest request;
      std::vector<int> frame_idx = evenly_spaced_indices(
          static_cast<int>(record.full_frames.size()), config.evolver.frames_per_request);
      for (int idx : frame_idx)
        request.frames.push_back(record.full_frames[static_cast<std::size_t>(idx)]);
      if (config.mode == SearchMode::kEst) {
        // EST passes only the current target prompt.
        PromptChain latest;
        latest.entries.push_back(result.chain.entries.back());
        request.prompt_chain = std::move(latest);
      } else {
        request.prompt_chain = result.chain;
      }
      request.iteration = n;
      request.temperature = config.evolver.temperature;
      request.mode = config.mode;

      try {
        Proposal proposal = propose_next(request, evolver, config.evolver.retry_limit);
        result.chain.append(PromptEntry{proposal.text, n + 1, PromptSource::kEvolver,
                                        proposal.raw_model_response});
      } catch (const std::exception& e) {
        result.truncated = true;
        result.truncation_reason = e.what();
      }
    }

    if (hooks.on_iteration) hooks.on_iteration(record, result.chain);
    if (result.truncated) break;
  }
  return result;
}

RunMetrics evaluate_run(const std::vector<IterationRecord>& records) {
  if (records.empty()) throw ConfigError("evaluate_run: need at least one record");
  RunMetrics metrics;
  for (const auto& r : records) {
    metrics.oe_mean.push_back(r.oe.mean);
    metrics.oe_std.push_back(r.oe.std_dev);
  }
  metrics.delta_oe = records.size() < 2 ? 0.0 : delta_oe(records.back().oe, records.front().oe);
  return metrics;
}

}  // namespace asalpp
