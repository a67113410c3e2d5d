#include "asalpp/metrics/objectives.hpp"

namespace asalpp {

SimilarityMatrix similarity_matrix(const std::vector<EmbeddingVector>& frame_embeddings,
                                   const std::vector<EmbeddingVector>& prompt_embeddings) {
  SimilarityMatrix sim(static_cast<Eigen::Index>(frame_embeddings.size()),
                       static_cast<Eigen::Index>(prompt_embeddings.size()));
  for (Eigen::Index i = 0; i < sim.rows(); ++i)
    for (Eigen::Index j = 0; j < sim.cols(); ++j)
      sim(i, j) = cosine(frame_embeddings[static_cast<std::size_t>(i)],
                         prompt_embeddings[static_cast<std::size_t>(j)]);
  return sim;
}

std::vector<int> select_checkpoints(ObjectiveMode mode, int prompt_count, int rollout_steps,
                                    int checkpoints_per_prompt) {
  if (prompt_count < 1) throw ConfigError("select_checkpoints: need at least one prompt");
  if (mode == ObjectiveMode::kSingle) return {rollout_steps};
  if (checkpoints_per_prompt < 1)
    throw ConfigError("select_checkpoints: checkpoints_per_prompt must be >= 1");
  const long long total = static_cast<long long>(prompt_count) * checkpoints_per_prompt;
  if (rollout_steps < total)
    throw ConfigError("select_checkpoints: rollout too short for " + std::to_string(total) +
                      " checkpoints (T = " + std::to_string(rollout_steps) + ")");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(total));
  for (long long m = 1; m <= total; ++m)
    out.push_back(static_cast<int>(m * rollout_steps / total));
  return out;
}

}  // namespace asalpp
