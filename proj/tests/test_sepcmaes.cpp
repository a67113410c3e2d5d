#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "asalpp/core/errors.hpp"
#include "asalpp/io/run_store.hpp"
#include "asalpp/opt/sep_cmaes.hpp"

using namespace asalpp;

namespace {

using Es = SepCmaEs<double>;
using Vector = Es::Vector;

double sphere(const Vector& x) { return x.squaredNorm(); }

double rosenbrock(const Vector& x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    double a = x[i + 1] - x[i] * x[i];
    double b = 1.0 - x[i];
    acc += 100.0 * a * a + b * b;
  }
  return acc;
}

template <typename F>
int run_until(Es& es, F loss, double target, int max_evals) {
  int evals = 0;
  while (evals < max_evals && es.best_loss() > target) {
    auto candidates = es.ask();
    std::vector<double> losses;
    losses.reserve(candidates.size());
    for (const auto& c : candidates) losses.push_back(loss(c));
    es.tell(candidates, losses);
    evals += static_cast<int>(candidates.size());
  }
  return evals;
}

}  // namespace

TEST_CASE("es_init state and ask sampling distribution") {
  SepCmaEsConfig config;
  config.dimension = 4;
  config.population = 1000;
  config.sigma0 = 0.3;
  config.seed = 7;
  Vector x0(4);
  x0 << 1.0, -2.0, 0.5, 3.0;
  Es es(config, x0);

  CHECK(es.generation() == 0);
  CHECK(es.diag_cov() == Vector::Ones(4));
  CHECK(es.best_loss() == std::numeric_limits<double>::infinity());
  CHECK(es.mean() == x0);

  auto candidates = es.ask();
  REQUIRE(candidates.size() == 1000);
  Vector mean = Vector::Zero(4);
  for (const auto& c : candidates) mean += c;
  mean /= 1000.0;
  for (int i = 0; i < 4; ++i) CHECK(std::abs(mean[i] - x0[i]) < 0.1 * config.sigma0);

  Vector wrong(3);
  CHECK_THROWS_AS(Es(config, wrong), ConfigError);
}

TEST_CASE("ask: count, dimension, determinism, sigma->0 limit") {
  SepCmaEsConfig config;
  config.dimension = 6;
  config.seed = 11;
  Vector x0 = Vector::Constant(6, 2.0);
  Es es(config, x0);
  CHECK(es.population() == 9);  // 4 + floor(3 ln 6)

  auto first = es.ask();
  auto second = es.ask();
  REQUIRE(first.size() == static_cast<std::size_t>(es.population()));
  for (const auto& c : first) REQUIRE(c.size() == 6);
  for (std::size_t i = 0; i < first.size(); ++i) REQUIRE(first[i] == second[i]);

  SepCmaEsConfig tiny = config;
  tiny.sigma0 = 1e-30;
  Es collapsed(tiny, x0);
  for (const auto& c : collapsed.ask()) REQUIRE(c == x0);
}

TEST_CASE("default population rule") {
  CHECK(sep_cmaes_default_population(1) == 8);
  CHECK(sep_cmaes_default_population(16) == 12);
  CHECK(sep_cmaes_default_population(100) == 17);
}

TEST_CASE("one tell on a 1-D quadratic moves the mean toward the optimum") {
  SepCmaEsConfig config;
  config.dimension = 1;
  config.seed = 3;
  Vector x0 = Vector::Constant(1, 1.0);
  Es es(config, x0);
  auto candidates = es.ask();
  std::vector<double> losses;
  for (const auto& c : candidates) losses.push_back(c[0] * c[0]);
  es.tell(candidates, losses);
  CHECK(std::abs(es.mean()[0]) < 1.0);
  CHECK(es.generation() == 1);
}

TEST_CASE("tell: best tracking, ties, non-finite losses") {
  SepCmaEsConfig config;
  config.dimension = 2;
  config.seed = 5;
  Es es(config, Vector::Zero(2));

  auto candidates = es.ask();
  std::vector<double> losses(candidates.size(), 1.0);
  losses[3] = 0.25;
  es.tell(candidates, losses);
  CHECK(es.best_loss() == 0.25);
  CHECK(es.best_theta() == candidates[3]);

  // All-equal worse losses leave the incumbent untouched.
  auto next = es.ask();
  std::vector<double> equal(next.size(), 5.0);
  es.tell(next, equal);
  CHECK(es.best_loss() == 0.25);
  CHECK(es.best_theta() == candidates[3]);

  // Non-finite losses are ranked worst, never crowned best.
  auto third = es.ask();
  std::vector<double> with_nan(third.size(), 2.0);
  with_nan[0] = std::numeric_limits<double>::quiet_NaN();
  with_nan[1] = std::numeric_limits<double>::infinity();
  es.tell(third, with_nan);
  CHECK(es.best_loss() == 0.25);
  CHECK(es.sigma() > 0.0);
  CHECK(es.diag_cov().minCoeff() > 0.0);

  std::vector<double> short_losses(2, 0.0);
  CHECK_THROWS_AS(es.tell(third, short_losses), ConfigError);
}

TEST_CASE("best_loss is non-increasing across tells") {
  SepCmaEsConfig config;
  config.dimension = 8;
  config.seed = 17;
  Es es(config, Vector::Constant(8, 1.0));
  double previous = std::numeric_limits<double>::infinity();
  for (int g = 0; g < 50; ++g) {
    auto candidates = es.ask();
    std::vector<double> losses;
    for (const auto& c : candidates) losses.push_back(sphere(c));
    es.tell(candidates, losses);
    CHECK(es.best_loss() <= previous);
    previous = es.best_loss();
  }
}

TEST_CASE("sphere 16-D converges below 1e-6 within 4000 evaluations") {
  SepCmaEsConfig config;
  config.dimension = 16;
  config.sigma0 = 0.3;
  config.seed = 2024;
  Es es(config, Vector::Ones(16));
  int evals = run_until(es, sphere, 1e-6, 4000);
  INFO("evaluations used: ", evals);
  CHECK(es.best_loss() < 1e-6);
  // The positivity floors exist but should stay far away on benchmarks.
  CHECK(es.sigma() > 1e-9);
  CHECK(es.diag_cov().minCoeff() > 1e-12);
}

TEST_CASE("rosenbrock 8-D reaches 1e-3 within 40000 evaluations") {
  SepCmaEsConfig config;
  config.dimension = 8;
  config.sigma0 = 0.3;
  config.seed = 2024;
  Es es(config, Vector::Zero(8));
  int evals = run_until(es, rosenbrock, 1e-3, 40000);
  INFO("evaluations used: ", evals);
  CHECK(es.best_loss() < 1e-3);
}

TEST_CASE("search depends only on loss ranking (scale equivariance)") {
  SepCmaEsConfig config;
  config.dimension = 5;
  config.seed = 77;
  Es a(config, Vector::Ones(5));
  Es b(config, Vector::Ones(5));
  for (int g = 0; g < 5; ++g) {
    auto ca = a.ask();
    auto cb = b.ask();
    REQUIRE(ca.size() == cb.size());
    for (std::size_t i = 0; i < ca.size(); ++i) REQUIRE(ca[i] == cb[i]);
    std::vector<double> la, lb;
    for (const auto& c : ca) la.push_back(sphere(c));
    for (const auto& c : cb) lb.push_back(10.0 * sphere(c));
    a.tell(ca, la);
    b.tell(cb, lb);
  }
  CHECK(a.mean() == b.mean());
  CHECK(a.sigma() == b.sigma());
}

TEST_CASE("jointly permuting candidates and losses leaves the update unchanged") {
  SepCmaEsConfig config;
  config.dimension = 4;
  config.seed = 31;
  Es a(config, Vector::Ones(4));
  Es b(config, Vector::Ones(4));

  auto candidates = a.ask();
  std::vector<double> losses;
  for (const auto& c : candidates) losses.push_back(sphere(c));  // distinct a.s.

  std::vector<std::size_t> perm{5, 2, 7, 0, 3, 6, 1, 4};
  std::vector<Vector> shuffled;
  std::vector<double> shuffled_losses;
  for (std::size_t idx : perm) {
    shuffled.push_back(candidates[idx]);
    shuffled_losses.push_back(losses[idx]);
  }

  a.tell(candidates, losses);
  b.tell(shuffled, shuffled_losses);
  CHECK(a.mean() == b.mean());
  CHECK(a.sigma() == b.sigma());
  CHECK(a.diag_cov() == b.diag_cov());
  CHECK(a.best_loss() == b.best_loss());
}

TEST_CASE("snapshot blob round-trips through disk") {
  SepCmaEsConfig config;
  config.dimension = 6;
  config.seed = 13;
  Es es(config, Vector::Ones(6));
  for (int g = 0; g < 3; ++g) {
    auto candidates = es.ask();
    std::vector<double> losses;
    for (const auto& c : candidates) losses.push_back(sphere(c));
    es.tell(candidates, losses);
  }

  auto path = std::filesystem::temp_directory_path() / "asalpp_es_state.bin";
  Es::Snapshot snapshot = es.snapshot();
  write_es_snapshot(snapshot, path.string());
  Es::Snapshot loaded = read_es_snapshot(path.string());
  CHECK(loaded.generation == snapshot.generation);
  CHECK(loaded.sigma == snapshot.sigma);
  CHECK(loaded.best_loss == snapshot.best_loss);
  CHECK(loaded.mean == snapshot.mean);
  CHECK(loaded.diag_cov == snapshot.diag_cov);
  CHECK(loaded.path_sigma == snapshot.path_sigma);
  CHECK(loaded.path_cov == snapshot.path_cov);
  CHECK(loaded.best_theta == snapshot.best_theta);

  Es restored(config, Vector::Zero(6));
  restored.restore(loaded);
  CHECK(restored.generation() == es.generation());
  // The restored optimizer continues deterministically from the float32
  // rounded state.
  auto next_a = restored.ask();
  Es twice(config, Vector::Zero(6));
  twice.restore(loaded);
  auto next_b = twice.ask();
  for (std::size_t i = 0; i < next_a.size(); ++i) REQUIRE(next_a[i] == next_b[i]);
  std::filesystem::remove(path);
}
