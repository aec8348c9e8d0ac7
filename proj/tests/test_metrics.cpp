#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cwct/macs.hpp"
#include "cwct/metrics.hpp"
#include "test_support.hpp"

using namespace cwct;
using cwct::testing::tiny_config;

namespace {

// Rank-by-rank recomputation sharing no code with the implementation:
// explicitly sorts (score desc, index asc) and walks the confusion counts.
double ap_oracle(const std::vector<float>& scores, const std::vector<std::uint8_t>& pos,
                 double omega /* <= 0 means uncalibrated */) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  long long tp = 0, fp = 0;
  double sum = 0.0;
  long long npos = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (pos[idx[k]]) {
      ++tp;
      ++npos;
      if (omega > 0.0)
        sum += tp / (tp + fp / omega);
      else
        sum += static_cast<double>(tp) / static_cast<double>(tp + fp);
    } else {
      ++fp;
    }
  }
  return sum / static_cast<double>(npos);
}

}  // namespace

TEST_CASE("cross entropy identities") {
  const int n = 7, classes = 5;
  Matrix onehot(n, classes);
  std::vector<int> labels(n);
  std::mt19937 rng(1);
  for (int i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(rng() % classes);
    onehot.at(i, labels[i]) = 1.0f;
  }
  CHECK(cross_entropy_window(onehot, labels) == 0.0);

  Matrix uniform(n, classes);
  std::fill(uniform.data.begin(), uniform.data.end(), 1.0f / classes);
  CHECK(cross_entropy_window(uniform, labels) ==
        doctest::Approx(n * std::log(static_cast<double>(classes))).epsilon(1e-6));

  // Zero probability is clamped, not -inf.
  Matrix zeros(1, classes);
  CHECK(cross_entropy_window(zeros, {0}) == doctest::Approx(-std::log(1e-12)));

  CHECK_THROWS(cross_entropy_window(onehot, std::vector<int>(n - 1, 0)));
  CHECK_THROWS(cross_entropy_window(onehot, std::vector<int>(n, classes)));
}

TEST_CASE("cross entropy matches an independent per-frame sum") {
  std::mt19937 rng(2);
  const int n = 20, classes = 6;
  Matrix pred = cwct::testing::random_matrix(n, classes, rng, 0.01f, 1.0f);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng() % classes);
  double want = 0.0;
  for (int i = 0; i < n; ++i) want -= std::log(static_cast<double>(pred.at(i, labels[i])));
  CHECK(cross_entropy_window(pred, labels) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("total_loss arithmetic") {
  CHECK(total_loss(1.0, 1.0, 1.0, 1.0, 0.2, 0.7, 0.4) == doctest::Approx(2.3).epsilon(1e-12));
  CHECK(total_loss(3.5, 9.0, 2.0, 7.0, 0.0, 0.0, 0.0) == 3.5);
  CHECK(total_loss(0.0, 0.0, 0.0, 0.0, 0.2, 0.7, 0.4) == 0.0);
}

TEST_CASE("average precision hand cases") {
  CHECK(average_precision({0.4f}, {1}) == 1.0);
  CHECK(average_precision({0.9f, 0.8f, 0.1f}, {1, 0, 1}) == doctest::Approx(5.0 / 6.0));
  // All positives: 1.0 regardless of scores.
  CHECK(average_precision({0.1f, 0.9f, 0.5f}, {1, 1, 1}) == 1.0);
  CHECK_THROWS(average_precision({0.5f, 0.6f}, {0, 0}));
}

TEST_CASE("calibrated AP hand case and degenerate inputs") {
  // omega = 1: reduces to plain AP.
  CHECK(calibrated_ap({0.9f, 0.8f, 0.7f, 0.1f}, {1, 0, 0, 1}) ==
        doctest::Approx(ap_oracle({0.9f, 0.8f, 0.7f, 0.1f}, {1, 0, 0, 1}, -1.0)));
  // All positives ranked first.
  CHECK(calibrated_ap({0.9f, 0.8f, 0.2f, 0.1f}, {1, 1, 0, 0}) == 1.0);
  CHECK_THROWS(calibrated_ap({0.5f, 0.6f}, {1, 1}));  // no negative
  CHECK_THROWS(calibrated_ap({0.5f, 0.6f}, {0, 0}));  // no positive
}

TEST_CASE("AP and cAP match the brute-force oracle on random instances") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 30;
    std::vector<float> scores(n);
    std::vector<std::uint8_t> pos(n);
    int npos = 0;
    for (int i = 0; i < n; ++i) {
      // Coarse quantization forces plenty of score ties.
      scores[i] = std::round(dist(rng) * 8.0f) / 8.0f;
      pos[i] = rng() % 3 == 0 ? 1 : 0;
      npos += pos[i];
    }
    if (npos == 0) pos[static_cast<int>(rng() % n)] = npos = 1;

    CHECK(average_precision(scores, pos) == ap_oracle(scores, pos, -1.0));
    if (npos < n) {
      const double omega = static_cast<double>(n - npos) / npos;
      CHECK(calibrated_ap(scores, pos) == ap_oracle(scores, pos, omega));
    }
  }
}

TEST_CASE("cAP equals AP whenever positives and negatives are balanced") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (int trial = 0; trial < 200; ++trial) {
    const int half = 1 + static_cast<int>(rng() % 12);
    std::vector<float> scores(2 * half);
    std::vector<std::uint8_t> pos(2 * half, 0);
    for (auto& s : scores) s = dist(rng);
    std::fill(pos.begin(), pos.begin() + half, 1);
    std::shuffle(pos.begin(), pos.end(), rng);
    CHECK(calibrated_ap(scores, pos) == doctest::Approx(average_precision(scores, pos)).epsilon(1e-12));
  }
}

TEST_CASE("AP is invariant to strictly monotone score transforms") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 25;
    std::vector<float> scores(n);
    std::vector<std::uint8_t> pos(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = dist(rng);
      pos[i] = rng() % 2;
    }
    pos[0] = 1;
    std::vector<float> warped(n);
    for (int i = 0; i < n; ++i) warped[i] = std::exp(3.0f * scores[i]) - 0.5f;
    CHECK(average_precision(scores, pos) == average_precision(warped, pos));
  }
}

TEST_CASE("promoting a positive past a negative never hurts AP") {
  std::mt19937 rng(6);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 15;
    std::vector<float> scores(n);
    std::vector<std::uint8_t> pos(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = dist(rng);
      pos[i] = rng() % 2;
    }
    pos[0] = 1;
    const double before = average_precision(scores, pos);
    // Swap the labels of an adjacent (negative above positive) pair in rank
    // order: the positive moves up.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
    for (int k = 0; k + 1 < n; ++k) {
      if (!pos[idx[k]] && pos[idx[k + 1]]) {
        std::swap(pos[idx[k]], pos[idx[k + 1]]);
        break;
      }
    }
    CHECK(average_precision(scores, pos) >= before - 1e-12);
  }
}

TEST_CASE("evaluate_scores averages actions, skips background and empties") {
  // 4 frames, 3 classes (0 = background).
  Matrix scores(4, 3);
  std::vector<int> labels{1, 0, 1, 0};
  // Class 1 scores: ranking puts both positives on top -> AP 1.
  scores.at(0, 1) = 0.9f;
  scores.at(1, 1) = 0.1f;
  scores.at(2, 1) = 0.8f;
  scores.at(3, 1) = 0.2f;
  const EvalSummary s = evaluate_scores(scores, labels);
  CHECK(s.ap_classes == 1);  // class 2 has no positives and is skipped
  CHECK(s.mean_ap == 1.0);
  CHECK(s.cap_classes == 1);
  CHECK(s.mean_cap == 1.0);

  CHECK_THROWS(evaluate_scores(scores, std::vector<int>{0, 0, 0, 0}));
  CHECK_THROWS(evaluate_scores(scores, std::vector<int>{1, 0, 1}));
}

TEST_CASE("MAC accounting: encoder ratio is exactly N_w") {
  for (const ModelConfig& cfg : {tiny_config(), default_config()}) {
    const MacBreakdown c = circular_step_macs(cfg);
    const MacBreakdown s = sliding_step_macs(cfg);
    CHECK(s.window_encoder == static_cast<long long>(cfg.num_windows) * c.window_encoder);
    CHECK(s.window_encoder % c.window_encoder == 0);
    CHECK(s.window_encoder / c.window_encoder == cfg.num_windows);
    // Everything outside the window encoder is shared.
    CHECK(c.bank_attention == s.bank_attention);
    CHECK(c.trend_path == s.trend_path);
    CHECK(c.total() > 0);
  }
}

TEST_CASE("MAC formula spot check against hand arithmetic") {
  // One attention layer over n=4 tokens, c=8 channels, FFN x2:
  // qkv 3*4*64 = 768, scores 2*4*4*8 = 256, out 4*64 = 256,
  // ffn 2*4*8*16 = 1024  -> 2304 per layer.
  ModelConfig cfg = tiny_config();
  const long long enc = encode_window_macs(cfg);
  // stage 0: attn 2304 + slimming: T 4*8*16=512, bottleneck 4*16*2=128,
  // scores 2*2*4*2=32, mixes 2*4*16=128, out 2*16*16=512 -> 1312.
  CHECK(enc == 2304 + 1312);
}
