#pragma once

#include <vector>

#include "asalpp/embed/embedding.hpp"

namespace asalpp {

/// Per-frame open-endedness: per_frame[k] is the novelty of frame k+1
/// relative to every earlier frame (one minus the maximum cosine to any
/// earlier frame embedding). mean/std are over the per-frame series
/// (population std).
struct OeSeries {
  std::vector<double> per_frame;
  double mean = 0.0;
  double std_dev = 0.0;
};

/// Requires at least 2 embeddings.
OeSeries oe_score(const std::vector<EmbeddingVector>& frame_embeddings);

/// Difference of the mean OE of the final and initial simulation.
inline double delta_oe(const OeSeries& final_series, const OeSeries& initial_series) {
  return final_series.mean - initial_series.mean;
}

/// `limit` evenly spaced indices over [0, total): used to thin rollout
/// frames for in-loop OE diagnostics and for evolver videos. Returns all
/// indices when total <= limit.
std::vector<int> evenly_spaced_indices(int total, int limit);

}  // namespace asalpp
