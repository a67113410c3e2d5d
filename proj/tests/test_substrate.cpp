#include <doctest.h>

#include <cmath>

#include "asalpp/core/errors.hpp"
#include "asalpp/core/rng.hpp"
#include "asalpp/substrate/lenia.hpp"

using namespace asalpp;

namespace {

LeniaConfig small_config(int n = 16, int c = 2, int k = 4, int m = 8, int t = 8) {
  LeniaConfig config;
  config.grid_size = n;
  config.channels = c;
  config.kernel_count = k;
  config.init_patch = m;
  config.rollout_steps = t;
  return config;
}

ThetaVector random_theta(const LeniaConfig& config, std::uint64_t seed, double scale = 1.5) {
  RandomStream stream(seed);
  ThetaVector theta(config.theta_length());
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    theta[i] = static_cast<float>(scale * stream.next_normal());
  return theta;
}

GridState random_state(const LeniaConfig& config, std::uint64_t seed) {
  RandomStream stream(seed);
  GridState state;
  state.channel.resize(static_cast<std::size_t>(config.channels));
  for (auto& c : state.channel) {
    c.resize(config.grid_size, config.grid_size);
    for (int y = 0; y < config.grid_size; ++y)
      for (int x = 0; x < config.grid_size; ++x)
        c(y, x) = static_cast<float>(stream.next_uniform());
  }
  return state;
}

// Direct O(n^4) circular convolution in double; the oracle the FFT path is
// checked against.
Eigen::ArrayXXd direct_torus_convolution(const Eigen::ArrayXXf& kernel, const Eigen::ArrayXXf& field) {
  const int n = static_cast<int>(kernel.rows());
  Eigen::ArrayXXd out(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          acc += static_cast<double>(kernel(a, b)) *
                 static_cast<double>(field(((y - a) % n + n) % n, ((x - b) % n + n) % n));
      out(y, x) = acc;
    }
  }
  return out;
}

GridState shifted(const GridState& state, int dy, int dx) {
  GridState out = state;
  const int n = static_cast<int>(state.channel.front().rows());
  for (std::size_t c = 0; c < state.channel.size(); ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        out.channel[c](((y + dy) % n + n) % n, ((x + dx) % n + n) % n) = state.channel[c](y, x);
  return out;
}

}  // namespace

TEST_CASE("decode_params maps raw values through the documented squashing") {
  LeniaConfig config = small_config();
  ThetaVector theta = ThetaVector::Zero(config.theta_length());
  DecodedParams decoded = decode_params(theta, config);
  CHECK(decoded.mu[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(decoded.sigma[0] == doctest::Approx(0.126).epsilon(1e-5));
  CHECK(decoded.height[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(decoded.radius[0] == doctest::Approx(0.55).epsilon(1e-6));
  CHECK(decoded.patch[0](0, 0) == doctest::Approx(0.5).epsilon(1e-6));

  theta[2 * config.kernel_count] = 1e9f;  // height entry saturates
  decoded = decode_params(theta, config);
  CHECK(decoded.height[0] == doctest::Approx(1.0).epsilon(1e-9));

  ThetaVector wrong(config.theta_length() + 1);
  CHECK_THROWS_AS(decode_params(wrong, config), ConfigError);
}

TEST_CASE("init_state places the decoded patch centered, zeros elsewhere") {
  LeniaConfig config = small_config();

  ThetaVector theta = ThetaVector::Constant(config.theta_length(), -1e9f);
  GridState state = init_state(theta, config);
  for (const auto& c : state.channel) CHECK(c.abs().maxCoeff() == 0.0f);

  theta.setZero();
  state = init_state(theta, config);
  const int offset = (config.grid_size - config.init_patch) / 2;
  CHECK(state.channel[0](offset, offset) == doctest::Approx(0.5));
  CHECK(state.channel[0](0, 0) == 0.0f);
  CHECK(state.channel[0](offset - 1, offset) == 0.0f);

  // Placement preserves the decoded values: total activation equals the
  // patch sum.
  ThetaVector random = random_theta(config, 7);
  DecodedParams decoded = decode_params(random, config);
  state = init_state(random, config);
  double patch_sum = 0.0, grid_sum = 0.0;
  for (int c = 0; c < config.channels; ++c) {
    patch_sum += decoded.patch[static_cast<std::size_t>(c)].cast<double>().sum();
    grid_sum += state.channel[static_cast<std::size_t>(c)].cast<double>().sum();
  }
  CHECK(grid_sum == doctest::Approx(patch_sum).epsilon(1e-6));
}

TEST_CASE("growth is the Gaussian bump in (-1, 1]") {
  CHECK(growth(0.3f, 0.3f, 0.05f) == doctest::Approx(1.0));
  // 2 e^{-1/2} - 1
  CHECK(growth(0.35f, 0.3f, 0.05f) == doctest::Approx(0.2131).epsilon(1e-4));
  CHECK(growth(0.25f, 0.3f, 0.05f) == doctest::Approx(0.2131).epsilon(1e-4));
  CHECK(growth(0.3f + 10 * 0.05f, 0.3f, 0.05f) < -0.999f);
  CHECK(growth(0.3f - 10 * 0.05f, 0.3f, 0.05f) < -0.999f);
}

TEST_CASE("ring kernels: shell peak, normalization, support") {
  CHECK(kernel_shell(0.5f) == doctest::Approx(1.0));
  CHECK(kernel_shell(0.0f) == 0.0f);
  CHECK(kernel_shell(1.0f) == 0.0f);

  LeniaConfig config;  // default 128 grid
  ThetaVector theta = ThetaVector::Zero(config.theta_length());
  DecodedParams decoded = decode_params(theta, config);
  const float r_max = static_cast<float>(config.grid_size) / 4.0f;
  for (int k = 0; k < config.kernel_count; ++k) {
    Eigen::ArrayXXf kernel = spatial_kernel(decoded, k, config);
    CHECK(kernel.sum() == doctest::Approx(1.0).epsilon(1e-6));
    const float support = decoded.radius[k] * r_max;
    for (int y = 0; y < config.grid_size; ++y) {
      for (int x = 0; x < config.grid_size; ++x) {
        if (kernel(y, x) == 0.0f) continue;
        float dy = static_cast<float>(std::min(y, config.grid_size - y));
        float dx = static_cast<float>(std::min(x, config.grid_size - x));
        REQUIRE(std::sqrt(dx * dx + dy * dy) < support);
      }
    }
  }
}

TEST_CASE("FFT convolution matches the direct spatial oracle on a 16x16 torus") {
  LeniaConfig config = small_config(16, 1, 3, 8, 4);
  Fft2d fft(16);
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    ThetaVector theta = random_theta(config, 100 + trial);
    DecodedParams decoded = decode_params(theta, config);
    GridState state = random_state(config, 200 + trial);
    for (int k = 0; k < config.kernel_count; ++k) {
      Eigen::ArrayXXf kernel = spatial_kernel(decoded, k, config);
      Eigen::MatrixXcf khat, shat;
      fft.forward(kernel, khat);
      fft.forward(state.channel[0], shat);
      Eigen::ArrayXXf conv;
      fft.inverse_real(khat.cwiseProduct(shat), conv);

      Eigen::ArrayXXd expected = direct_torus_convolution(kernel, state.channel[0]);
      double max_diff = (conv.cast<double>() - expected).abs().maxCoeff();
      REQUIRE(max_diff < 1e-5);
    }
  }
}

TEST_CASE("step: dead state is a fixed point when growth(0) < 0 for every kernel") {
  LeniaConfig config = small_config();
  ThetaVector theta = ThetaVector::Zero(config.theta_length());
  // sigma raw -> minimum width, mu stays at 0.5: growth(0, 0.5, ~0.001) ~ -1.
  for (int k = 0; k < config.kernel_count; ++k) theta[config.kernel_count + k] = -30.0f;
  theta.segment(4 * config.kernel_count, config.theta_length() - 4 * config.kernel_count)
      .setConstant(-1e9f);  // empty initial patch

  DecodedParams decoded = decode_params(theta, config);
  for (int k = 0; k < config.kernel_count; ++k)
    REQUIRE(growth(0.0f, decoded.mu[k], decoded.sigma[k]) < 0.0f);

  Fft2d fft(config.grid_size);
  FourierKernels kernels = build_kernels(decoded, config, fft);
  GridState state = init_state(theta, config);
  step(state, kernels, decoded, config, fft);
  for (const auto& c : state.channel) CHECK(c.abs().maxCoeff() == 0.0f);
}

TEST_CASE("step commutes with torus translations") {
  LeniaConfig config = small_config(16, 2, 4, 8, 4);
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    ThetaVector theta = random_theta(config, 300 + trial);
    DecodedParams decoded = decode_params(theta, config);
    Fft2d fft(config.grid_size);
    FourierKernels kernels = build_kernels(decoded, config, fft);

    GridState state = random_state(config, 400 + trial);
    RandomStream stream(500 + trial);
    int dy = static_cast<int>(stream.next_u64() % 16);
    int dx = static_cast<int>(stream.next_u64() % 16);

    GridState moved = shifted(state, dy, dx);
    step(state, kernels, decoded, config, fft);
    step(moved, kernels, decoded, config, fft);
    GridState expected = shifted(state, dy, dx);

    for (std::size_t c = 0; c < moved.channel.size(); ++c) {
      double max_diff =
          (moved.channel[c].cast<double>() - expected.channel[c].cast<double>()).abs().maxCoeff();
      REQUIRE(max_diff < 1e-5);
    }
  }
}

TEST_CASE("step keeps activations in [0, 1]") {
  LeniaConfig config = small_config(16, 2, 4, 8, 4);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    ThetaVector theta = random_theta(config, 600 + trial, 3.0);
    DecodedParams decoded = decode_params(theta, config);
    Fft2d fft(config.grid_size);
    FourierKernels kernels = build_kernels(decoded, config, fft);
    GridState state = random_state(config, 700 + trial);
    for (int t = 0; t < 5; ++t) {
      step(state, kernels, decoded, config, fft);
      for (const auto& c : state.channel) {
        REQUIRE(c.minCoeff() >= 0.0f);
        REQUIRE(c.maxCoeff() <= 1.0f);
      }
    }
  }
}

TEST_CASE("render maps channels to RGB bytes") {
  LeniaConfig config = small_config(8, 3, 3, 4, 4);
  GridState state;
  state.channel.assign(3, Eigen::ArrayXXf::Zero(8, 8));

  Frame black = render(state, config);
  for (std::uint8_t b : black.rgb) REQUIRE(b == 0);

  state.channel[0](2, 5) = 1.0f;  // row y=2, col x=5
  Frame frame = render(state, config);
  CHECK(frame.pixel(5, 2)[0] == 255);
  CHECK(frame.pixel(5, 2)[1] == 0);
  CHECK(frame.pixel(5, 2)[2] == 0);

  CHECK(render(state, config) == frame);  // byte-identical

  // C=1 replicates, C=2 leaves blue zero.
  LeniaConfig mono = small_config(8, 1, 3, 4, 4);
  GridState one;
  one.channel.assign(1, Eigen::ArrayXXf::Constant(8, 8, 0.5f));
  Frame gray = render(one, mono);
  CHECK(gray.pixel(0, 0)[0] == gray.pixel(0, 0)[1]);
  CHECK(gray.pixel(0, 0)[1] == gray.pixel(0, 0)[2]);

  LeniaConfig duo = small_config(8, 2, 4, 4, 4);
  GridState two;
  two.channel.assign(2, Eigen::ArrayXXf::Constant(8, 8, 1.0f));
  Frame yellow = render(two, duo);
  CHECK(yellow.pixel(0, 0)[0] == 255);
  CHECK(yellow.pixel(0, 0)[1] == 255);
  CHECK(yellow.pixel(0, 0)[2] == 0);
}

TEST_CASE("rollout: checkpoints, determinism, validation") {
  LeniaConfig config = small_config(16, 2, 4, 8, 6);
  ThetaVector theta = random_theta(config, 42);

  Rollout only_init = rollout(theta, config, {0});
  REQUIRE(only_init.frames.size() == 1);
  CHECK(only_init.frames[0] == render(init_state(theta, config), config));

  std::vector<int> all;
  for (int t = 0; t <= config.rollout_steps; ++t) all.push_back(t);
  Rollout full = rollout(theta, config, all);
  CHECK(full.frames.size() == static_cast<std::size_t>(config.rollout_steps) + 1);

  Rollout again = rollout(theta, config, all);
  for (std::size_t i = 0; i < full.frames.size(); ++i) REQUIRE(full.frames[i] == again.frames[i]);

  CHECK_THROWS_AS(rollout(theta, config, {3, 3}), ConfigError);
  CHECK_THROWS_AS(rollout(theta, config, {5, 4}), ConfigError);
  CHECK_THROWS_AS(rollout(theta, config, {config.rollout_steps + 1}), ConfigError);
}

TEST_CASE("config invariants") {
  LeniaConfig config = small_config();
  CHECK(config.theta_length() == 4 * 4 + 8 * 8 * 2);
  config.init_patch = config.grid_size + 1;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = small_config();
  config.dt = 0.0f;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = small_config();
  config.dt = 1.5f;
  CHECK_THROWS_AS(config.validate(), ConfigError);

  // Kernel wiring rule.
  LeniaConfig wiring = small_config(16, 3, 9, 8, 4);
  CHECK(wiring.kernel_source(4) == 1);
  CHECK(wiring.kernel_target(4) == 1);
  CHECK(wiring.kernel_source(7) == 1);
  CHECK(wiring.kernel_target(7) == 2);
}
