#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "asalpp/core/errors.hpp"
#include "asalpp/core/rng.hpp"

namespace asalpp {

/// Default population size: 4 + floor(3 ln n), floored at 8.
inline int sep_cmaes_default_population(int dimension) {
  int lambda = 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
  return std::max(8, lambda);
}

struct SepCmaEsConfig {
  int dimension = 0;
  int population = 0;  // 0 -> default rule
  double sigma0 = 0.3;
  std::uint64_t seed = 0;
  int max_stagnation = 200;  // generations without best-loss improvement

  int effective_population() const {
    return population > 0 ? population : sep_cmaes_default_population(dimension);
  }

  void validate() const {
    if (dimension < 1) throw ConfigError("sep-cma-es: dimension must be >= 1");
    if (effective_population() < 4) throw ConfigError("sep-cma-es: population must be >= 4");
    if (!(sigma0 > 0.0)) throw ConfigError("sep-cma-es: sigma0 must be > 0");
  }
};

/// Separable CMA-ES (Ros & Hansen): diagonal covariance, cumulative step-size
/// adaptation, rank-one + rank-mu updates restricted to the diagonal with the
/// (n+2)/3 learning-rate increase. Ask/tell interface; ranking depends only
/// on loss order, so the search is invariant to monotone loss rescaling.
template <typename Scalar = double>
class SepCmaEs {
 public:
  using Vector = Eigen::Vector<Scalar, Eigen::Dynamic>;

  SepCmaEs(const SepCmaEsConfig& config, const Vector& x0) : config_(config) {
    config_.validate();
    const int n = config_.dimension;
    if (x0.size() != n) throw ConfigError("sep-cma-es: x0 length does not match dimension");

    lambda_ = config_.effective_population();
    mu_ = lambda_ / 2;

    weights_.resize(mu_);
    double wsum = 0.0;
    for (int i = 0; i < mu_; ++i) {
      weights_[i] = std::log(mu_ + 0.5) - std::log(static_cast<double>(i + 1));
      wsum += weights_[i];
    }
    double w2 = 0.0;
    for (auto& w : weights_) {
      w /= wsum;
      w2 += w * w;
    }
    mu_eff_ = 1.0 / w2;

    const double nd = static_cast<double>(n);
    c_sigma_ = (mu_eff_ + 2.0) / (nd + mu_eff_ + 3.0);
    d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (nd + 1.0)) - 1.0) + c_sigma_;
    c_c_ = 4.0 / (nd + 4.0);
    double c_cov = (1.0 / mu_eff_) * 2.0 / ((nd + std::sqrt(2.0)) * (nd + std::sqrt(2.0))) +
                   (1.0 - 1.0 / mu_eff_) *
                       std::min(1.0, (2.0 * mu_eff_ - 1.0) / ((nd + 2.0) * (nd + 2.0) + mu_eff_));
    c_cov = std::min(1.0, (nd + 2.0) / 3.0 * c_cov);  // separable learning-rate increase
    c_one_ = c_cov / mu_eff_;
    c_mu_ = std::min(1.0 - c_one_, c_cov * (1.0 - 1.0 / mu_eff_));
    chi_n_ = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

    mean_ = x0;
    diag_cov_ = Vector::Ones(n);
    sigma_ = static_cast<Scalar>(config_.sigma0);
    path_sigma_ = Vector::Zero(n);
    path_cov_ = Vector::Zero(n);
    generation_ = 0;
    best_loss_ = std::numeric_limits<double>::infinity();
    best_theta_ = x0;
  }

  int population() const { return lambda_; }
  int dimension() const { return config_.dimension; }
  int generation() const { return generation_; }
  Scalar sigma() const { return sigma_; }
  const Vector& mean() const { return mean_; }
  const Vector& diag_cov() const { return diag_cov_; }
  const Vector& path_sigma() const { return path_sigma_; }
  const Vector& path_cov() const { return path_cov_; }
  double best_loss() const { return best_loss_; }
  const Vector& best_theta() const { return best_theta_; }
  const SepCmaEsConfig& config() const { return config_; }

  /// Samples lambda candidates m + sigma * sqrt(d) .* z from the stream
  /// seeded by (seed, generation). Does not mutate state: asking twice
  /// returns identical candidates.
  std::vector<Vector> ask() const {
    RandomStream stream(mix64(config_.seed, static_cast<std::uint64_t>(generation_)));
    Vector step_scale = diag_cov_.array().sqrt().matrix() * sigma_;
    std::vector<Vector> candidates(static_cast<std::size_t>(lambda_));
    for (int i = 0; i < lambda_; ++i) {
      Vector x(config_.dimension);
      for (int j = 0; j < config_.dimension; ++j)
        x[j] = mean_[j] + step_scale[j] * static_cast<Scalar>(stream.next_normal());
      candidates[static_cast<std::size_t>(i)] = std::move(x);
    }
    return candidates;
  }

  /// Ranks candidates by loss (ascending, non-finite worst, stable with tie
  /// break by candidate index) and applies the sep-CMA-ES update.
  void tell(const std::vector<Vector>& candidates, const std::vector<double>& losses) {
    if (candidates.size() != static_cast<std::size_t>(lambda_) || losses.size() != candidates.size())
      throw ConfigError("sep-cma-es: tell expects exactly lambda candidates and losses");

    std::vector<int> order(static_cast<std::size_t>(lambda_));
    std::iota(order.begin(), order.end(), 0);
    auto rank_key = [&](int i) {
      double l = losses[static_cast<std::size_t>(i)];
      return std::isfinite(l) ? l : std::numeric_limits<double>::infinity();
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rank_key(a) < rank_key(b); });

    const int n = config_.dimension;
    const Scalar sigma_old = sigma_;
    const Vector mean_old = mean_;

    // y_i = (x_i - m) / sigma for the mu best; y_w = weighted recombination.
    Vector y_w = Vector::Zero(n);
    std::vector<Vector> y_sel(static_cast<std::size_t>(mu_));
    for (int i = 0; i < mu_; ++i) {
      const Vector& x = candidates[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      y_sel[static_cast<std::size_t>(i)] = (x - mean_old) / sigma_old;
      y_w += static_cast<Scalar>(weights_[static_cast<std::size_t>(i)]) * y_sel[static_cast<std::size_t>(i)];
    }

    mean_ = mean_old + sigma_old * y_w;

    // Cumulative step-size adaptation with C^{-1/2} = diag(1/sqrt(d)).
    Vector inv_sqrt_d = diag_cov_.array().rsqrt().matrix();
    path_sigma_ = static_cast<Scalar>(1.0 - c_sigma_) * path_sigma_ +
                  static_cast<Scalar>(std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_)) *
                      inv_sqrt_d.cwiseProduct(y_w);

    double ps_norm = static_cast<double>(path_sigma_.norm());
    double denom = std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * (generation_ + 1)));
    bool h_sigma = ps_norm / denom < (1.4 + 2.0 / (n + 1.0)) * chi_n_;

    path_cov_ = static_cast<Scalar>(1.0 - c_c_) * path_cov_;
    if (h_sigma)
      path_cov_ += static_cast<Scalar>(std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_)) * y_w;

    // Diagonal covariance: rank-one + rank-mu, with the stall correction
    // applied when h_sigma is off.
    Vector rank_mu = Vector::Zero(n);
    for (int i = 0; i < mu_; ++i)
      rank_mu += static_cast<Scalar>(weights_[static_cast<std::size_t>(i)]) *
                 y_sel[static_cast<std::size_t>(i)].array().square().matrix();
    double one_minus = 1.0 - c_one_ - c_mu_;
    double stall = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);
    diag_cov_ = static_cast<Scalar>(one_minus + c_one_ * stall) * diag_cov_ +
                static_cast<Scalar>(c_one_) * path_cov_.array().square().matrix() +
                static_cast<Scalar>(c_mu_) * rank_mu;
    diag_cov_ = diag_cov_.cwiseMax(static_cast<Scalar>(1e-20));

    sigma_ = sigma_old * static_cast<Scalar>(std::exp(c_sigma_ / d_sigma_ * (ps_norm / chi_n_ - 1.0)));
    sigma_ = std::max(sigma_, static_cast<Scalar>(1e-12));

    int best_idx = order.front();
    double gen_best = losses[static_cast<std::size_t>(best_idx)];
    if (std::isfinite(gen_best) && gen_best < best_loss_) {
      best_loss_ = gen_best;
      best_theta_ = candidates[static_cast<std::size_t>(best_idx)];
      stagnation_ = 0;
    } else {
      ++stagnation_;
    }
    ++generation_;
  }

  /// Generations since best_loss last improved.
  int stagnation() const { return stagnation_; }
  bool stagnated() const { return config_.max_stagnation > 0 && stagnation_ >= config_.max_stagnation; }

  // -- checkpointing (JSON header + little-endian float32 payload) ----------

  struct Snapshot {
    int generation = 0;
    int stagnation = 0;
    double sigma = 0.0;
    double best_loss = 0.0;
    std::vector<float> mean, diag_cov, path_sigma, path_cov, best_theta;
  };

  Snapshot snapshot() const {
    Snapshot s;
    s.generation = generation_;
    s.stagnation = stagnation_;
    s.sigma = static_cast<double>(sigma_);
    s.best_loss = best_loss_;
    auto to_f32 = [](const Vector& v) {
      std::vector<float> out(static_cast<std::size_t>(v.size()));
      for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
      return out;
    };
    s.mean = to_f32(mean_);
    s.diag_cov = to_f32(diag_cov_);
    s.path_sigma = to_f32(path_sigma_);
    s.path_cov = to_f32(path_cov_);
    s.best_theta = to_f32(best_theta_);
    return s;
  }

  void restore(const Snapshot& s) {
    auto from_f32 = [this](const std::vector<float>& v) {
      if (v.size() != static_cast<std::size_t>(config_.dimension))
        throw ConfigError("sep-cma-es: snapshot dimension mismatch");
      Vector out(config_.dimension);
      for (int i = 0; i < config_.dimension; ++i) out[i] = static_cast<Scalar>(v[static_cast<std::size_t>(i)]);
      return out;
    };
    mean_ = from_f32(s.mean);
    diag_cov_ = from_f32(s.diag_cov).cwiseMax(static_cast<Scalar>(1e-20));
    path_sigma_ = from_f32(s.path_sigma);
    path_cov_ = from_f32(s.path_cov);
    best_theta_ = from_f32(s.best_theta);
    sigma_ = std::max(static_cast<Scalar>(s.sigma), static_cast<Scalar>(1e-12));
    best_loss_ = s.best_loss;
    generation_ = s.generation;
    stagnation_ = s.stagnation;
  }

 private:
  SepCmaEsConfig config_;
  int lambda_ = 0;
  int mu_ = 0;
  std::vector<double> weights_;
  double mu_eff_ = 0.0;
  double c_sigma_ = 0.0, d_sigma_ = 0.0, c_c_ = 0.0, c_one_ = 0.0, c_mu_ = 0.0, chi_n_ = 0.0;

  Vector mean_;
  Vector diag_cov_;
  Scalar sigma_ = 0;
  Vector path_sigma_;
  Vector path_cov_;
  int generation_ = 0;
  int stagnation_ = 0;
  double best_loss_ = 0.0;
  Vector best_theta_;
};

}  // namespace asalpp
