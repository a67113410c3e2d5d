#pragma once

#include <Eigen/Dense>
#include <vector>

#include "asalpp/core/frame.hpp"
#include "asalpp/substrate/fft2d.hpp"

namespace asalpp {

/// Flat unconstrained parameter vector defining one Lenia simulation
/// (kernel dynamics + initial seed patch). Single precision throughout:
/// all simulation arithmetic is 32-bit.
using ThetaVector = Eigen::VectorXf;

struct LeniaConfig {
  int grid_size = 128;    // N, cells per side
  int channels = 3;       // C
  int kernel_count = 9;   // K
  float dt = 0.1f;
  int init_patch = 32;    // M, side of the optimizable seed patch
  int rollout_steps = 256;  // T

  // Deterministic kernel wiring: kernel k reads channel k mod C and writes
  // channel (k / C) mod C.
  int kernel_source(int k) const { return k % channels; }
  int kernel_target(int k) const { return (k / channels) % channels; }

  int theta_length() const { return 4 * kernel_count + init_patch * init_patch * channels; }

  /// Throws ConfigError when any invariant is violated.
  void validate() const;
};

/// Theta decoded into valid Lenia ranges via sigmoid squashing:
///   mu in (0,1), sigma in (0.001, 0.251), height in (0,1), radius in (0.1, 1.0),
///   patch entries in (0,1).
struct DecodedParams {
  Eigen::ArrayXf mu;
  Eigen::ArrayXf sigma;
  Eigen::ArrayXf height;
  Eigen::ArrayXf radius;
  std::vector<Eigen::ArrayXXf> patch;  // per channel, M x M, (row, col)
};

/// C planes of N x N activations, each value in [0, 1].
struct GridState {
  std::vector<Eigen::ArrayXXf> channel;

  bool all_finite() const;
};

/// Ring kernels stored in the Fourier domain on the N x N torus, plus the
/// per-target-channel height normalizer used by the growth update.
struct FourierKernels {
  std::vector<Eigen::MatrixXcf> spectrum;
  Eigen::ArrayXf target_height_sum;  // sum of h_k per target channel
};

/// Rendered frames of a trajectory at the requested checkpoint indices.
struct Rollout {
  std::vector<int> checkpoints;
  std::vector<Frame> frames;
};

// Theta layout: [mu_0..mu_{K-1} | sigma_* | height_* | radius_* | patch],
// patch ordered channel-major, then row, then column.
DecodedParams decode_params(const ThetaVector& theta, const LeniaConfig& config);

/// Zero grid except a centered M x M patch per channel holding the decoded
/// seed values. Init is a point distribution, so rollouts are deterministic
/// functions of theta.
GridState init_state(const ThetaVector& theta, const LeniaConfig& config);

/// Gaussian growth, range (-1, 1]: 2 exp(-(u - mu)^2 / (2 sigma^2)) - 1.
inline float growth(float u, float mu, float sigma) {
  float d = (u - mu) / sigma;
  return 2.0f * std::exp(-0.5f * d * d) - 1.0f;
}

Eigen::ArrayXXf growth(const Eigen::ArrayXXf& u, float mu, float sigma);

/// Unnormalized ring profile as a function of the normalized radius:
/// a Gaussian shell peaking at 1.0 for rho = 0.5, width 0.15, supported on
/// rho in (0, 1).
inline float kernel_shell(float rho) {
  if (rho <= 0.0f || rho >= 1.0f) return 0.0f;
  float z = (rho - 0.5f) / 0.15f;
  return std::exp(-0.5f * z * z);
}

/// Spatial ring kernel for kernel k, centered at the grid origin with torus
/// distances: exp(-((rho - 0.5)/0.15)^2 / 2) for rho = d / (r_k * R_max) in
/// (0,1), zero elsewhere; normalized to sum 1. R_max = N/4. A radius so small
/// that no lattice point falls inside the ring yields the zero kernel (the
/// kernel then contributes a constant growth(0) field).
Eigen::ArrayXXf spatial_kernel(const DecodedParams& decoded, int k, const LeniaConfig& config);

FourierKernels build_kernels(const DecodedParams& decoded, const LeniaConfig& config, Fft2d& fft);

/// One synchronous update: per kernel U_k = K_k * A_{source(k)} (toroidal FFT
/// convolution of the pre-step state), then per channel
///   A_c <- clip(A_c + dt * sum_{k->c} h_k G(U_k) / max(1, sum_{k->c} h_k), 0, 1).
/// Throws NumericFault if any activation is non-finite afterwards.
void step(GridState& state, const FourierKernels& kernels, const DecodedParams& decoded,
          const LeniaConfig& config, Fft2d& fft);

/// Maps channels to RGB (C=1 replicated, C=2 blue zero, C>=3 first three),
/// value v -> round(v * 255).
Frame render(const GridState& state, const LeniaConfig& config);

/// Runs T steps from init_state, rendering at each checkpoint index
/// (0 = initial state). Checkpoints must be strictly increasing in [0, T].
Rollout rollout(const ThetaVector& theta, const LeniaConfig& config,
                const std::vector<int>& checkpoints);

/// Bundles decoded params, kernels and the FFT workspace for repeated
/// stepping of one simulation.
class LeniaSimulator {
 public:
  LeniaSimulator(const ThetaVector& theta, const LeniaConfig& config);

  void advance();
  const GridState& state() const { return state_; }
  GridState& state() { return state_; }
  Frame render_current() const { return render(state_, config_); }
  const LeniaConfig& config() const { return config_; }

 private:
  LeniaConfig config_;
  DecodedParams decoded_;
  Fft2d fft_;
  FourierKernels kernels_;
  GridState state_;
};

}  // namespace asalpp
