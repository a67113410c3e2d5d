#include "asalpp/substrate/lenia.hpp"

#include <cmath>
#include <string>

#include "asalpp/core/errors.hpp"

namespace asalpp {

namespace {

inline float sigmoidf(float x) {
  // Split on sign to avoid exp overflow for large |x|.
  if (x >= 0.0f) {
    float e = std::exp(-x);
    return 1.0f / (1.0f + e);
  }
  float e = std::exp(x);
  return e / (1.0f + e);
}

}  // namespace

void LeniaConfig::validate() const {
  if (grid_size < 1 || channels < 1 || kernel_count < 1 || init_patch < 1 || rollout_steps < 1)
    throw ConfigError("lenia: N, C, K, M, T must all be >= 1");
  if (init_patch > grid_size) throw ConfigError("lenia: init_patch M must be <= grid_size N");
  if (!(dt > 0.0f) || dt > 1.0f) throw ConfigError("lenia: dt must lie in (0, 1]");
}

bool GridState::all_finite() const {
  for (const auto& c : channel)
    if (!c.isFinite().all()) return false;
  return true;
}

DecodedParams decode_params(const ThetaVector& theta, const LeniaConfig& config) {
  config.validate();
  if (theta.size() != config.theta_length())
    throw ConfigError("lenia: theta length " + std::to_string(theta.size()) +
                      " does not match config (expected " +
                      std::to_string(config.theta_length()) + ")");

  const int k = config.kernel_count;
  const int m = config.init_patch;
  DecodedParams out;
  out.mu.resize(k);
  out.sigma.resize(k);
  out.height.resize(k);
  out.radius.resize(k);
  for (int i = 0; i < k; ++i) {
    out.mu[i] = sigmoidf(theta[i]);
    out.sigma[i] = 0.001f + sigmoidf(theta[k + i]) * 0.25f;
    out.height[i] = sigmoidf(theta[2 * k + i]);
    out.radius[i] = 0.1f + sigmoidf(theta[3 * k + i]) * 0.9f;
  }
  out.patch.resize(static_cast<std::size_t>(config.channels));
  int idx = 4 * k;
  for (int c = 0; c < config.channels; ++c) {
    auto& p = out.patch[static_cast<std::size_t>(c)];
    p.resize(m, m);
    for (int y = 0; y < m; ++y)
      for (int x = 0; x < m; ++x) p(y, x) = sigmoidf(theta[idx++]);
  }
  return out;
}

GridState init_state(const ThetaVector& theta, const LeniaConfig& config) {
  DecodedParams decoded = decode_params(theta, config);
  const int n = config.grid_size;
  const int m = config.init_patch;
  const int offset = (n - m) / 2;
  GridState state;
  state.channel.resize(static_cast<std::size_t>(config.channels));
  for (int c = 0; c < config.channels; ++c) {
    auto& a = state.channel[static_cast<std::size_t>(c)];
    a = Eigen::ArrayXXf::Zero(n, n);
    a.block(offset, offset, m, m) = decoded.patch[static_cast<std::size_t>(c)];
  }
  return state;
}

Eigen::ArrayXXf growth(const Eigen::ArrayXXf& u, float mu, float sigma) {
  Eigen::ArrayXXf d = (u - mu) / sigma;
  return 2.0f * (-0.5f * d.square()).exp() - 1.0f;
}

Eigen::ArrayXXf spatial_kernel(const DecodedParams& decoded, int k, const LeniaConfig& config) {
  const int n = config.grid_size;
  const float r_max = static_cast<float>(n) / 4.0f;
  const float support = decoded.radius[k] * r_max;
  Eigen::ArrayXXf kernel = Eigen::ArrayXXf::Zero(n, n);
  for (int y = 0; y < n; ++y) {
    float dy = static_cast<float>(std::min(y, n - y));
    for (int x = 0; x < n; ++x) {
      float dx = static_cast<float>(std::min(x, n - x));
      float d = std::sqrt(dx * dx + dy * dy);
      kernel(y, x) = kernel_shell(d / support);
    }
  }
  float sum = kernel.sum();
  if (sum > 0.0f) kernel /= sum;
  return kernel;
}

FourierKernels build_kernels(const DecodedParams& decoded, const LeniaConfig& config, Fft2d& fft) {
  FourierKernels out;
  out.spectrum.resize(static_cast<std::size_t>(config.kernel_count));
  out.target_height_sum = Eigen::ArrayXf::Zero(config.channels);
  for (int k = 0; k < config.kernel_count; ++k) {
    Eigen::ArrayXXf kernel = spatial_kernel(decoded, k, config);
    fft.forward(kernel, out.spectrum[static_cast<std::size_t>(k)]);
    out.target_height_sum[config.kernel_target(k)] += decoded.height[k];
  }
  return out;
}

void step(GridState& state, const FourierKernels& kernels, const DecodedParams& decoded,
          const LeniaConfig& config, Fft2d& fft) {
  const int n = config.grid_size;
  const int c_count = config.channels;

  std::vector<Eigen::MatrixXcf> channel_spectrum(static_cast<std::size_t>(c_count));
  for (int c = 0; c < c_count; ++c)
    fft.forward(state.channel[static_cast<std::size_t>(c)], channel_spectrum[static_cast<std::size_t>(c)]);

  std::vector<Eigen::ArrayXXf> accum(static_cast<std::size_t>(c_count),
                                     Eigen::ArrayXXf::Zero(n, n));
  Eigen::MatrixXcf product(n, n);
  Eigen::ArrayXXf field(n, n);
  for (int k = 0; k < config.kernel_count; ++k) {
    const int src = config.kernel_source(k);
    const int tgt = config.kernel_target(k);
    product = kernels.spectrum[static_cast<std::size_t>(k)].cwiseProduct(
        channel_spectrum[static_cast<std::size_t>(src)]);
    fft.inverse_real(product, field);
    accum[static_cast<std::size_t>(tgt)] +=
        decoded.height[k] * growth(field, decoded.mu[k], decoded.sigma[k]);
  }

  for (int c = 0; c < c_count; ++c) {
    float norm = std::max(1.0f, kernels.target_height_sum[c]);
    auto& a = state.channel[static_cast<std::size_t>(c)];
    a = (a + config.dt * accum[static_cast<std::size_t>(c)] / norm).cwiseMax(0.0f).cwiseMin(1.0f);
  }

  if (!state.all_finite()) throw NumericFault("lenia: non-finite activation after step");
}

Frame render(const GridState& state, const LeniaConfig& config) {
  const int n = config.grid_size;
  Frame frame(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      std::uint8_t* px = frame.pixel(x, y);
      for (int rgb = 0; rgb < 3; ++rgb) {
        int c = rgb;
        if (config.channels == 1) c = 0;
        if (c >= config.channels) {
          px[rgb] = 0;
          continue;
        }
        float v = state.channel[static_cast<std::size_t>(c)](y, x);
        px[rgb] = static_cast<std::uint8_t>(std::lround(std::min(std::max(v, 0.0f), 1.0f) * 255.0f));
      }
    }
  }
  return frame;
}

LeniaSimulator::LeniaSimulator(const ThetaVector& theta, const LeniaConfig& config)
    : config_(config),
      decoded_(decode_params(theta, config)),
      fft_(config.grid_size),
      kernels_(build_kernels(decoded_, config, fft_)),
      state_(init_state(theta, config)) {}

void LeniaSimulator::advance() { step(state_, kernels_, decoded_, config_, fft_); }

Rollout rollout(const ThetaVector& theta, const LeniaConfig& config,
                const std::vector<int>& checkpoints) {
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 0 || checkpoints[i] > config.rollout_steps)
      throw ConfigError("rollout: checkpoint outside [0, T]");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
      throw ConfigError("rollout: checkpoints must be strictly increasing");
  }

  LeniaSimulator sim(theta, config);
  Rollout out;
  out.checkpoints = checkpoints;
  out.frames.reserve(checkpoints.size());
  std::size_t next = 0;
  if (next < checkpoints.size() && checkpoints[next] == 0) {
    out.frames.push_back(sim.render_current());
    ++next;
  }
  for (int t = 1; t <= config.rollout_steps && next < checkpoints.size(); ++t) {
    sim.advance();
    if (checkpoints[next] == t) {
      out.frames.push_back(sim.render_current());
      ++next;
    }
  }
  return out;
}

}  // namespace asalpp
