#include "cwct/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cstring>

namespace cwct::kernels {
namespace {

constexpr int kPanel = 16;

__attribute__((target("avx2,fma"))) void pack_b_256(const float* b, float* bp, int k, int n) {
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
__attribute__((target("avx2,fma"))) void tile_256(const float* a, const float* panel, float* c,
                                                  int k, int n, int j, int cols, int i) {
  __m256 acc[2 * R];
  for (auto& v : acc) v = _mm256_setzero_ps();
  for (int p = 0; p < k; ++p) {
    const __m256 b0 = _mm256_loadu_ps(panel + p * kPanel);
    const __m256 b1 = _mm256_loadu_ps(panel + p * kPanel + 8);
    for (int r = 0; r < R; ++r) {
      const __m256 av = _mm256_set1_ps(a[static_cast<std::size_t>(i + r) * k + p]);
      acc[2 * r] = _mm256_fmadd_ps(av, b0, acc[2 * r]);
      acc[2 * r + 1] = _mm256_fmadd_ps(av, b1, acc[2 * r + 1]);
    }
  }
  for (int r = 0; r < R; ++r) {
    float* crow = c + static_cast<std::size_t>(i + r) * n + j;
    if (cols == kPanel) {
      _mm256_storeu_ps(crow, acc[2 * r]);
      _mm256_storeu_ps(crow + 8, acc[2 * r + 1]);
    } else {
      float tmp[kPanel];
      _mm256_storeu_ps(tmp, acc[2 * r]);
      _mm256_storeu_ps(tmp + 8, acc[2 * r + 1]);
      for (int jj = 0; jj < cols; ++jj) crow[jj] = tmp[jj];
    }
  }
}

__attribute__((target("avx2,fma"))) void gemm_packed_256(const float* a, const float* bp, float* c,
                                                         int m, int k, int n) {
  const int np = (n + kPanel - 1) / kPanel;
  for (int jp = 0; jp < np; ++jp) {
    const float* panel = bp + static_cast<std::size_t>(jp) * k * kPanel;
    const int j = jp * kPanel;
    const int cols = n - j < kPanel ? n - j : kPanel;
    int i = 0;
    for (; i + 6 <= m; i += 6) tile_256<6>(a, panel, c, k, n, j, cols, i);
    for (; i + 2 <= m; i += 2) tile_256<2>(a, panel, c, k, n, j, cols, i);
    for (; i < m; ++i) tile_256<1>(a, panel, c, k, n, j, cols, i);
  }
}

__attribute__((target("avx2,fma"))) void gemm_256(const float* a, const float* b, float* c, int m,
                                                  int k, int n) {
  std::memset(c, 0, sizeof(float) * static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = a[static_cast<std::size_t>(i) * k + p];
      const float* brow = b + static_cast<std::size_t>(p) * n;
      const __m256 avv = _mm256_set1_ps(av);
      int j = 0;
      for (; j + 8 <= n; j += 8) {
        _mm256_storeu_ps(crow + j,
                         _mm256_fmadd_ps(avv, _mm256_loadu_ps(brow + j), _mm256_loadu_ps(crow + j)));
      }
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

__attribute__((target("avx2,fma"))) void gemm_nt_256(const float* a, const float* b, float* c,
                                                     int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * k;
      __m256 acc = _mm256_setzero_ps();
      int p = 0;
      for (; p + 8 <= k; p += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p), _mm256_loadu_ps(brow + p), acc);
      __m128 lo = _mm256_castps256_ps128(acc);
      __m128 hi = _mm256_extractf128_ps(acc, 1);
      __m128 s4 = _mm_add_ps(lo, hi);
      s4 = _mm_add_ps(s4, _mm_movehl_ps(s4, s4));
      s4 = _mm_add_ss(s4, _mm_shuffle_ps(s4, s4, 1));
      float s = _mm_cvtss_f32(s4);
      for (; p < k; ++p) s += arow[p] * brow[p];
      c[static_cast<std::size_t>(i) * n + j] = s;
    }
  }
}

__attribute__((target("avx2"))) void relu_256(float* x, std::size_t len) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) _mm256_storeu_ps(x + i, _mm256_max_ps(zero, _mm256_loadu_ps(x + i)));
  for (; i < len; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

__attribute__((target("avx2"))) void add_256(float* x, const float* y, std::size_t len) {
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8)
    _mm256_storeu_ps(x + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < len; ++i) x[i] += y[i];
}

}  // namespace

const Ops* avx2_ops() {
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
  static const Ops ops{"avx2",          kPanel,     gemm_256, gemm_nt_256,
                       gemm_packed_256, pack_b_256, relu_256, add_256};
  return &ops;
}

}  // namespace cwct::kernels

#else

namespace cwct::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace cwct::kernels

#endif
