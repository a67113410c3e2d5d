#pragma once

#include <chrono>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "asalpp/loop/search_loop.hpp"

namespace asalpp {

/// Fixed-format float for CSV cells ("%.10g"; nan/inf spelled out), so
/// rewritten metric files are byte-stable.
std::string format_double(double v);

std::string utc_timestamp(std::chrono::system_clock::time_point now);

/// Sortable, collision-resistant run id: UTC timestamp + short seed hash.
std::string make_run_id(std::uint64_t run_seed, std::chrono::system_clock::time_point now);

void write_es_snapshot(const SepCmaEs<double>::Snapshot& snapshot, const std::string& path);
SepCmaEs<double>::Snapshot read_es_snapshot(const std::string& path);

nlohmann::json prompt_chain_to_json(const PromptChain& chain);
PromptChain prompt_chain_from_json(const nlohmann::json& j);

/// Owns one run directory:
///   {root}/{run_id}/config.json
///   {root}/{run_id}/iter_{n:02}/{prompts.json, best_theta.bin(+.json),
///                                loss_curve.csv, oe.csv, frames/frame_{t:04}.png}
///   {root}/{run_id}/summary.json
///   {root}/{run_id}/state/{checkpoint.json, warm_theta.bin, es_state.bin}
/// A run directory is self-describing: config.json plus the binaries are
/// enough to resume or re-render.
class RunStore {
 public:
  RunStore(std::filesystem::path output_root, std::string run_id, std::string created_at);

  /// Reopens an existing run directory and reloads its summary rows (used by
  /// resume).
  static RunStore open(const std::filesystem::path& run_dir, const std::string& created_at);

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& run_id() const { return run_id_; }

  void write_config(const nlohmann::json& config_json);

  /// Persists one completed iteration and refreshes summary.json and the
  /// resume checkpoint. `chain` is the run chain after any proposal made at
  /// the end of this iteration.
  void write_iteration(const IterationRecord& record, const PromptChain& chain,
                       const RunConfig& config);

  void finalize_summary(const RunConfig& config, bool truncated, const std::string& reason);

  /// Mid-iteration checkpoint written when a provider error aborts the loop.
  void write_abort_checkpoint(int iteration, const PromptChain& chain,
                              const SepCmaEs<double>::Snapshot& snapshot);

  struct LoadedResume {
    ResumePoint point;
    int completed_iterations = 0;
  };
  static LoadedResume load_resume(const std::filesystem::path& run_dir);

  static std::filesystem::path iter_dir(const std::filesystem::path& run_dir, int iteration);

 private:
  struct SummaryRow {
    int iteration = 0;
    std::string prompt;
    double best_loss = 0.0;
    double oe_mean = 0.0;
    double oe_std = 0.0;
  };

  void write_summary_file(bool truncated, const std::string& reason) const;
  void write_progress_checkpoint(int next_iteration, const PromptChain& chain,
                                 const ThetaVector& warm_theta);

  std::filesystem::path dir_;
  std::string run_id_;
  std::string created_at_;
  std::string mode_name_;
  std::string seed_prompt_;
  std::vector<SummaryRow> rows_;
};

}  // namespace asalpp
