#include "asalpp/metrics/oe.hpp"

#include <algorithm>
#include <cmath>

#include "asalpp/core/errors.hpp"
#include "asalpp/metrics/objectives.hpp"

namespace asalpp {

OeSeries oe_score(const std::vector<EmbeddingVector>& frame_embeddings) {
  const std::size_t count = frame_embeddings.size();
  if (count < 2) throw ConfigError("oe_score: need at least 2 frame embeddings");

  OeSeries series;
  series.per_frame.reserve(count - 1);
  for (std::size_t t = 1; t < count; ++t) {
    double max_sim = -2.0;
    for (std::size_t earlier = 0; earlier < t; ++earlier) {
      // cosine(x, x) is 1 by definition; the dot product of a float unit
      // vector with itself only approximates it.
      double sim = frame_embeddings[t] == frame_embeddings[earlier]
                       ? 1.0
                       : cosine(frame_embeddings[t], frame_embeddings[earlier]);
      if (sim > max_sim) max_sim = sim;
    }
    // Unit vectors bound the cosine to [-1, 1]; clamping removes the float
    // slack so identical frames score exactly 0.
    series.per_frame.push_back(std::clamp(1.0 - max_sim, 0.0, 2.0));
  }

  double sum = 0.0;
  for (double v : series.per_frame) sum += v;
  series.mean = sum / static_cast<double>(series.per_frame.size());
  double sq = 0.0;
  for (double v : series.per_frame) sq += (v - series.mean) * (v - series.mean);
  series.std_dev = std::sqrt(sq / static_cast<double>(series.per_frame.size()));
  return series;
}

std::vector<int> evenly_spaced_indices(int total, int limit) {
  std::vector<int> out;
  if (total <= 0) return out;
  if (limit >= total || limit <= 0) {
    out.resize(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) out[static_cast<std::size_t>(i)] = i;
    return out;
  }
  out.reserve(static_cast<std::size_t>(limit));
  for (int i = 0; i < limit; ++i) {
    // Spread over the full range, always including the last frame.
    long long idx = static_cast<long long>(i) * (total - 1) / (limit - 1 > 0 ? limit - 1 : 1);
    if (out.empty() || out.back() != static_cast<int>(idx)) out.push_back(static_cast<int>(idx));
  }
  return out;
}

}  // namespace asalpp
