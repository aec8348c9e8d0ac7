#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cwct/cascade.hpp"
#include "test_support.hpp"

using namespace cwct;
using cwct::testing::random_matrix;
using cwct::testing::tiny_config;

namespace {

// A copy of the seeded store with the cascade residual paths (attention
// output projection and second FFN matrix) forced to zero, making every
// cascade layer an exact identity on the simplex.
WeightStore zero_cascade_store(const ModelConfig& cfg, std::uint64_t seed) {
  const WeightStore src = init_weights(cfg, seed);
  WeightStore out;
  for (const std::string& name : src.names()) {
    Matrix m = src.get(name);
    if (name.rfind("cascade.", 0) == 0 &&
        (name.find(".out.w") != std::string::npos || name.find(".ffn.w2") != std::string::npos))
      std::fill(m.data.begin(), m.data.end(), 0.0f);
    out.put(name, std::move(m));
  }
  return out;
}

// Random rows whose float left-to-right sum is exactly 1.0f.
Matrix exact_simplex_rows(int rows, int cols, std::mt19937& rng) {
  std::uniform_real_distribution<float> dist(0.5f / cols, 1.0f / cols);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    float partial = 0.0f;
    for (int j = 0; j < cols - 1; ++j) {
      m.at(i, j) = dist(rng);
      partial += m.at(i, j);
    }
    m.at(i, cols - 1) = 1.0f - partial;
    // Confirm the row really sums to 1.0f in float arithmetic.
    float sum = 0.0f;
    for (int j = 0; j < cols; ++j) sum += m.at(i, j);
    REQUIRE(sum == 1.0f);
    REQUIRE(m.at(i, cols - 1) > 1e-6f);
  }
  return m;
}

}  // namespace

TEST_CASE("simplex_renormalize clamps and L1-normalizes") {
  Matrix p(2, 3);
  p.at(0, 0) = 0.2f;
  p.at(0, 1) = 0.3f;
  p.at(0, 2) = 0.5f;
  p.at(1, 0) = -1.0f;  // clamped to 1e-8
  p.at(1, 1) = 3.0f;
  p.at(1, 2) = 1.0f;
  const Matrix out = simplex_renormalize(p);
  CHECK(out.at(0, 0) == doctest::Approx(0.2));
  CHECK(out.at(1, 0) == doctest::Approx(1e-8 / 4.00000001).epsilon(1e-4));
  for (int i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (int j = 0; j < 3; ++j) {
      CHECK(out.at(i, j) > 0.0f);
      sum += out.at(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("simplex_renormalize softmax mode is a row softmax") {
  std::mt19937 rng(1);
  const Matrix p = random_matrix(3, 4, rng);
  const Matrix out = simplex_renormalize(p, /*softmax_mode=*/true);
  const Matrix want = masked_row_softmax(p, nullptr, 1.0f);
  CHECK(out.data == want.data);
}

TEST_CASE("zero residual path makes refine the bit-exact identity") {
  const ModelConfig cfg = tiny_config();
  const WeightStore w = zero_cascade_store(cfg, 3);
  std::mt19937 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix p = exact_simplex_rows(cfg.trend_len, cfg.num_actions, rng);
    const Matrix out = refine(p, cfg, w);
    CHECK(out.data == p.data);
  }
}

TEST_CASE("refine keeps rows on the simplex and respects causality") {
  const ModelConfig cfg = tiny_config();
  const WeightStore w = init_weights(cfg, 5);
  std::mt19937 rng(3);
  const Matrix p = simplex_renormalize(random_matrix(cfg.trend_len, cfg.num_actions, rng, 0.0f, 1.0f));
  const Matrix base = refine(p, cfg, w);
  for (int i = 0; i < base.rows; ++i) {
    double sum = 0.0;
    for (int j = 0; j < base.cols; ++j) {
      CHECK(base.at(i, j) > 0.0f);
      sum += base.at(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
  }

  // Perturbing frame j leaves refined frames before j bit-identical.
  for (int j = 1; j < cfg.trend_len; ++j) {
    Matrix pert = p;
    pert.at(j, 0) += 0.25f;
    const Matrix out = refine(pert, cfg, w);
    for (int i = 0; i < j; ++i)
      for (int c = 0; c < out.cols; ++c) CHECK(out.at(i, c) == base.at(i, c));
  }

  CHECK_THROWS(refine(Matrix(cfg.trend_len, cfg.num_actions + 1), cfg, w));
}

TEST_CASE("refine with multiple stages reapplies the same layers") {
  ModelConfig cfg = tiny_config();
  const WeightStore w = init_weights(cfg, 7);
  std::mt19937 rng(4);
  const Matrix p = simplex_renormalize(random_matrix(cfg.trend_len, cfg.num_actions, rng, 0.0f, 1.0f));

  const Matrix once = refine(p, cfg, w);
  cfg.cascade_stages = 2;
  const Matrix twice = refine(p, cfg, w);
  ModelConfig one = cfg;
  one.cascade_stages = 1;
  CHECK(twice.data == refine(once, one, w).data);
}

TEST_CASE("history windows refine independently with the trend weights") {
  const ModelConfig cfg = tiny_config();
  const WeightStore w = init_weights(cfg, 9);
  std::mt19937 rng(5);
  std::vector<Matrix> windows;
  for (int n = 0; n < cfg.num_windows; ++n)
    windows.push_back(
        simplex_renormalize(random_matrix(cfg.window_size(), cfg.num_actions, rng, 0.0f, 1.0f)));

  const auto refined = refine_history_windows(windows, cfg, w);
  REQUIRE(refined.size() == windows.size());
  for (std::size_t n = 0; n < windows.size(); ++n)
    CHECK(refined[n].data == refine(windows[n], cfg, w).data);

  // Window independence: changing window 2 cannot move window 1.
  auto modified = windows;
  modified[2].at(0, 0) += 0.5f;
  const auto refined2 = refine_history_windows(modified, cfg, w);
  CHECK(refined2[1].data == refined[1].data);
  CHECK(refined2[2].data != refined[2].data);

  CHECK_THROWS(refine_history_windows({Matrix(cfg.window_size() + 1, cfg.num_actions)}, cfg, w));
}
