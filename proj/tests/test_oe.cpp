#include <doctest.h>

#include <cmath>
#include <vector>

#include "asalpp/core/errors.hpp"
#include "asalpp/core/rng.hpp"
#include "asalpp/metrics/oe.hpp"

using namespace asalpp;

namespace {

EmbeddingVector unit_axis(int dim, int axis) {
  EmbeddingVector v = EmbeddingVector::Zero(dim);
  v[axis] = 1.0f;
  return v;
}

std::vector<EmbeddingVector> random_unit_vectors(int count, int dim, std::uint64_t seed) {
  RandomStream stream(seed);
  std::vector<EmbeddingVector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    EmbeddingVector v(dim);
    for (int j = 0; j < dim; ++j) v[j] = static_cast<float>(stream.next_normal());
    out.push_back(v / v.norm());
  }
  return out;
}

// Pairwise-max oracle: builds the full similarity table with its own
// sequential double dot products.
std::vector<double> oe_reference(const std::vector<EmbeddingVector>& embeddings) {
  std::vector<double> out;
  for (std::size_t t = 1; t < embeddings.size(); ++t) {
    double best = -2.0;
    for (std::size_t e = 0; e < t; ++e) {
      double dot = 0.0;
      for (Eigen::Index i = 0; i < embeddings[t].size(); ++i)
        dot += static_cast<double>(embeddings[t][i]) * static_cast<double>(embeddings[e][i]);
      best = std::max(best, dot);
    }
    out.push_back(std::min(std::max(1.0 - best, 0.0), 2.0));
  }
  return out;
}

}  // namespace

TEST_CASE("oe_score endpoints") {
  std::vector<EmbeddingVector> same(5, unit_axis(8, 0));
  OeSeries zero = oe_score(same);
  for (double v : zero.per_frame) CHECK(v == 0.0);
  CHECK(zero.mean == 0.0);
  CHECK(zero.std_dev == 0.0);

  std::vector<EmbeddingVector> ortho;
  for (int i = 0; i < 4; ++i) ortho.push_back(unit_axis(8, i));
  OeSeries one = oe_score(ortho);
  for (double v : one.per_frame) CHECK(v == doctest::Approx(1.0));

  CHECK_THROWS_AS(oe_score({unit_axis(8, 0)}), ConfigError);
}

TEST_CASE("oe_score picks the maximum similarity over earlier frames") {
  // cos(e2, e0) = 0.2, cos(e2, e1) = 0.6 -> per_frame[2-1 .. index 1] = 0.4
  EmbeddingVector e0 = unit_axis(3, 0);
  EmbeddingVector e1 = unit_axis(3, 1);
  EmbeddingVector e2(3);
  e2 << 0.2f, 0.6f, std::sqrt(1.0f - 0.04f - 0.36f);
  OeSeries series = oe_score({e0, e1, e2});
  REQUIRE(series.per_frame.size() == 2);
  CHECK(series.per_frame[1] == doctest::Approx(0.4).epsilon(1e-6));
}

TEST_CASE("oe_score agrees exactly with the brute-force oracle") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    std::vector<EmbeddingVector> embeddings = random_unit_vectors(64, 32, seed);
    OeSeries series = oe_score(embeddings);
    std::vector<double> expected = oe_reference(embeddings);
    REQUIRE(series.per_frame.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) REQUIRE(series.per_frame[i] == expected[i]);
    for (double v : series.per_frame) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 2.0);
    }
  }
}

TEST_CASE("delta_oe is the difference of means") {
  OeSeries a;
  a.per_frame = {0.1, 0.2};
  a.mean = 0.0575;
  OeSeries b = a;
  CHECK(delta_oe(a, b) == 0.0);

  b.mean = 0.0305;
  CHECK(delta_oe(a, b) == doctest::Approx(0.027).epsilon(1e-9));
  CHECK(delta_oe(b, a) == doctest::Approx(-0.027).epsilon(1e-9));
}

TEST_CASE("evenly_spaced_indices covers the range and keeps the endpoints") {
  CHECK(evenly_spaced_indices(5, 10) == std::vector<int>({0, 1, 2, 3, 4}));
  std::vector<int> thin = evenly_spaced_indices(257, 32);
  CHECK(thin.size() == 32);
  CHECK(thin.front() == 0);
  CHECK(thin.back() == 256);
  for (std::size_t i = 1; i < thin.size(); ++i) CHECK(thin[i] > thin[i - 1]);
  CHECK(evenly_spaced_indices(0, 4).empty());
}
