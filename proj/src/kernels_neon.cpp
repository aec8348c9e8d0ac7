#include "cwct/kernels.hpp"

#if defined(__aarch64__) || defined(__ARM_NEON)

#include <arm_neon.h>

#include <cstring>

namespace cwct::kernels {
namespace {

constexpr int kPanel = 8;

void pack_b_neon(const float* b, float* bp, int k, int n) {
  const int np = (n + kPanel - 1) / kPanel;
  for (int jp = 0; jp < np; ++jp) {
    float* panel = bp + static_cast<std::size_t>(jp) * k * kPanel;
    for (int p = 0; p < k; ++p) {
      for (int jj = 0; jj < kPanel; ++jj) {
        const int j = jp * kPanel + jj;
        panel[p * kPanel + jj] = j < n ? b[static_cast<std::size_t>(p) * n + j] : 0.0f;
      }
    }
  }
}

template <int R>
void tile_neon(const float* a, const float* panel, float* c, int k, int n, int j, int cols, int i) {
  float32x4_t acc[2 * R];
  for (auto& v : acc) v = vdupq_n_f32(0.0f);
  for (int p = 0; p < k; ++p) {
    const float32x4_t b0 = vld1q_f32(panel + p * kPanel);
    const float32x4_t b1 = vld1q_f32(panel + p * kPanel + 4);
    for (int r = 0; r < R; ++r) {
      const float av = a[static_cast<std::size_t>(i + r) * k + p];
      acc[2 * r] = vfmaq_n_f32(acc[2 * r], b0, av);
      acc[2 * r + 1] = vfmaq_n_f32(acc[2 * r + 1], b1, av);
    }
  }
  for (int r = 0; r < R; ++r) {
    float* crow = c + static_cast<std::size_t>(i + r) * n + j;
    float tmp[kPanel];
    vst1q_f32(tmp, acc[2 * r]);
    vst1q_f32(tmp + 4, acc[2 * r + 1]);
    for (int jj = 0; jj < cols; ++jj) crow[jj] = tmp[jj];
  }
}

void gemm_packed_neon(const float* a, const float* bp, float* c, int m, int k, int n) {
  const int np = (n + kPanel - 1) / kPanel;
  for (int jp = 0; jp < np; ++jp) {
    const float* panel = bp + static_cast<std::size_t>(jp) * k * kPanel;
    const int j = jp * kPanel;
    const int cols = n - j < kPanel ? n - j : kPanel;
    int i = 0;
    for (; i + 4 <= m; i += 4) tile_neon<4>(a, panel, c, k, n, j, cols, i);
    for (; i < m; ++i) tile_neon<1>(a, panel, c, k, n, j, cols, i);
  }
}

void gemm_neon(const float* a, const float* b, float* c, int m, int k, int n) {
  std::memset(c, 0, sizeof(float) * static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = a[static_cast<std::size_t>(i) * k + p];
      const float* brow = b + static_cast<std::size_t>(p) * n;
      int j = 0;
      for (; j + 4 <= n; j += 4)
        vst1q_f32(crow + j, vfmaq_n_f32(vld1q_f32(crow + j), vld1q_f32(brow + j), av));
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt_neon(const float* a, const float* b, float* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * k;
      float32x4_t acc = vdupq_n_f32(0.0f);
      int p = 0;
      for (; p + 4 <= k; p += 4) acc = vfmaq_f32(acc, vld1q_f32(arow + p), vld1q_f32(brow + p));
      float s = vaddvq_f32(acc);
      for (; p < k; ++p) s += arow[p] * brow[p];
      c[static_cast<std::size_t>(i) * n + j] = s;
    }
  }
}

void relu_neon(float* x, std::size_t len) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) vst1q_f32(x + i, vmaxq_f32(zero, vld1q_f32(x + i)));
  for (; i < len; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void add_neon(float* x, const float* y, std::size_t len) {
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) vst1q_f32(x + i, vaddq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
  for (; i < len; ++i) x[i] += y[i];
}

}  // namespace

const Ops* neon_ops() {
  static const Ops ops{"neon",           kPanel,      gemm_neon, gemm_nt_neon,
                       gemm_packed_neon, pack_b_neon, relu_neon, add_neon};
  return &ops;
}

}  // namespace cwct::kernels

#else

namespace cwct::kernels {
const Ops* neon_ops() { return nullptr; }
}  // namespace cwct::kernels

#endif
