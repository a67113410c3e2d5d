#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "asalpp/core/errors.hpp"
#include "asalpp/embed/embedding.hpp"

namespace asalpp {

/// Checkpoint-by-prompt cosine similarities; entry (i, j) is the inner
/// product of checkpoint-frame embedding i and prompt embedding j.
using SimilarityMatrix = Eigen::MatrixXd;

enum class ObjectiveMode { kSingle, kTemporal };

struct ObjectiveSpec {
  ObjectiveMode mode = ObjectiveMode::kTemporal;
  double softmax_coefficient = 0.3;  // beta, blend weight in [0, 1]
  double softmax_sharpness = 10.0;   // alpha > 0
  int checkpoints_per_prompt = 1;

  void validate() const {
    if (softmax_coefficient < 0.0 || softmax_coefficient > 1.0)
      throw ConfigError("objective: softmax_coefficient must lie in [0, 1]");
    if (!(softmax_sharpness > 0.0)) throw ConfigError("objective: softmax_sharpness must be > 0");
    if (checkpoints_per_prompt < 1) throw ConfigError("objective: checkpoints_per_prompt must be >= 1");
  }
};

/// Cosine of two unit vectors, accumulated sequentially in double so results
/// are reproducible against naive reference loops.
inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) throw ConfigError("cosine: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

SimilarityMatrix similarity_matrix(const std::vector<EmbeddingVector>& frame_embeddings,
                                   const std::vector<EmbeddingVector>& prompt_embeddings);

/// Single supervised target: cosine of the final-checkpoint frame embedding
/// and the prompt embedding. The optimization loss is the negative score.
inline double score_single_target(const EmbeddingVector& rollout_final_embedding,
                                  const EmbeddingVector& prompt_embedding) {
  return cosine(rollout_final_embedding, prompt_embedding);
}

/// Temporal-targets score. For an S x P similarity matrix:
///   diag  = mean_i sim(i, prompt_of(i))
///   bidir = 0.5 (mean_j sum_i softmax_i(alpha sim(:,j)) sim(i,j)
///              + mean_i sum_j softmax_j(alpha sim(i,:)) sim(i,j))
///   score = (1 - beta) diag + beta bidir
/// With the default one checkpoint per prompt the matrix must be square and
/// prompt_of(i) = i.
template <typename Derived>
double score_temporal(const Eigen::MatrixBase<Derived>& sim, double beta, double alpha,
                      int checkpoints_per_prompt = 1) {
  const Eigen::Index s = sim.rows();
  const Eigen::Index p = sim.cols();
  if (beta < 0.0 || beta > 1.0) throw ConfigError("score_temporal: beta must lie in [0, 1]");
  if (!(alpha > 0.0)) throw ConfigError("score_temporal: alpha must be > 0");
  if (s < 1 || p < 1) throw ConfigError("score_temporal: empty similarity matrix");
  if (checkpoints_per_prompt < 1) throw ConfigError("score_temporal: checkpoints_per_prompt >= 1");
  if (s != p * checkpoints_per_prompt)
    throw ConfigError(checkpoints_per_prompt == 1
                          ? "score_temporal: matrix must be square (one checkpoint per prompt)"
                          : "score_temporal: rows must equal prompts * checkpoints_per_prompt");

  // .eval() keeps fixed-size inputs on the stack.
  auto m = sim.template cast<double>().eval();

  double diag = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) diag += m(i, i / checkpoints_per_prompt);
  diag /= static_cast<double>(s);

  auto softmax_weighted = [alpha](const auto& v) {
    auto w = (alpha * (v.array() - v.maxCoeff())).exp().eval();
    return (w * v.array()).sum() / w.sum();
  };

  double col_term = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) col_term += softmax_weighted(m.col(j));
  col_term /= static_cast<double>(p);

  double row_term = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) row_term += softmax_weighted(m.row(i).transpose());
  row_term /= static_cast<double>(s);

  double bidir = 0.5 * (col_term + row_term);
  return (1.0 - beta) * diag + beta * bidir;
}

/// Checkpoint step indices for the objective: temporal mode places one
/// checkpoint at the end of each of P even segments (floor(m T / P),
/// m = 1..P); single mode returns [T].
std::vector<int> select_checkpoints(ObjectiveMode mode, int prompt_count, int rollout_steps,
                                    int checkpoints_per_prompt = 1);

}  // namespace asalpp
