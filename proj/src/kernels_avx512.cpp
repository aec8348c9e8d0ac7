#include "cwct/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cstring>

namespace cwct::kernels {
namespace {

constexpr int kPanel = 32;

__attribute__((target("avx512f,fma"))) void pack_b_512(const float* b, float* bp, int k, int n) {
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
__attribute__((target("avx512f,fma"))) void tile_512(const float* a, const float* panel, float* c,
                                                     int k, int n, int j, int cols, int i,
                                                     const float* next_panel, int pf_begin,
                                                     int pf_end) {
  __m512 acc[2 * R];
  for (auto& v : acc) v = _mm512_setzero_ps();
  for (int p = 0; p < k; ++p) {
    // Row tiles after the first run out of L2; their spare memory slots
    // pull a slice of the next column panel in from DRAM so streaming
    // overlaps with the FMA work instead of serializing ahead of it. Each
    // later tile covers a different slice, keeping the prefetch demand
    // below what the memory system can absorb.
    if (next_panel && p >= pf_begin && p < pf_end) {
      _mm_prefetch(reinterpret_cast<const char*>(next_panel + p * kPanel), _MM_HINT_T1);
      _mm_prefetch(reinterpret_cast<const char*>(next_panel + p * kPanel + 16), _MM_HINT_T1);
    }
    const __m512 b0 = _mm512_loadu_ps(panel + p * kPanel);
    const __m512 b1 = _mm512_loadu_ps(panel + p * kPanel + 16);
    for (int r = 0; r < R; ++r) {
      const __m512 av = _mm512_set1_ps(a[static_cast<std::size_t>(i + r) * k + p]);
      acc[2 * r] = _mm512_fmadd_ps(av, b0, acc[2 * r]);
      acc[2 * r + 1] = _mm512_fmadd_ps(av, b1, acc[2 * r + 1]);
    }
  }
  for (int r = 0; r < R; ++r) {
    float* crow = c + static_cast<std::size_t>(i + r) * n + j;
    if (cols == kPanel) {
      _mm512_storeu_ps(crow, acc[2 * r]);
      _mm512_storeu_ps(crow + 16, acc[2 * r + 1]);
    } else {
      float tmp[kPanel];
      _mm512_storeu_ps(tmp, acc[2 * r]);
      _mm512_storeu_ps(tmp + 16, acc[2 * r + 1]);
      for (int jj = 0; jj < cols; ++jj) crow[jj] = tmp[jj];
    }
  }
}

__attribute__((target("avx512f,fma"))) void gemm_packed_512(const float* a, const float* bp,
                                                            float* c, int m, int k, int n) {
  const int np = (n + kPanel - 1) / kPanel;
  const int tiles = m / 8 + (m % 8) / 4 + (m % 4) / 2 + (m % 2);
  for (int jp = 0; jp < np; ++jp) {
    const float* panel = bp + static_cast<std::size_t>(jp) * k * kPanel;
    const float* next = jp + 1 < np ? panel + static_cast<std::size_t>(k) * kPanel : nullptr;
    const int j = jp * kPanel;
    const int cols = n - j < kPanel ? n - j : kPanel;
    // Tiles after the first split the next panel between them for prefetch.
    const int slices = tiles > 1 ? tiles - 1 : 1;
    int ti = 0;
    auto bounds = [&](int& b, int& e) {
      const int s = ti > 0 ? ti - 1 : 0;
      b = static_cast<int>(static_cast<long long>(k) * s / slices);
      e = static_cast<int>(static_cast<long long>(k) * (s + 1) / slices);
      ++ti;
    };
    int b = 0, e = 0;
    int i = 0;
    for (; i + 8 <= m; i += 8) {
      bounds(b, e);
      tile_512<8>(a, panel, c, k, n, j, cols, i, ti > 1 ? next : nullptr, b, e);
    }
    for (; i + 4 <= m; i += 4) {
      bounds(b, e);
      tile_512<4>(a, panel, c, k, n, j, cols, i, ti > 1 ? next : nullptr, b, e);
    }
    for (; i + 2 <= m; i += 2) {
      bounds(b, e);
      tile_512<2>(a, panel, c, k, n, j, cols, i, ti > 1 ? next : nullptr, b, e);
    }
    for (; i < m; ++i) {
      bounds(b, e);
      tile_512<1>(a, panel, c, k, n, j, cols, i, ti > 1 ? next : nullptr, b, e);
    }
  }
}

__attribute__((target("avx512f,fma"))) void gemm_512(const float* a, const float* b, float* c,
                                                     int m, int k, int n) {
  std::memset(c, 0, sizeof(float) * static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = a[static_cast<std::size_t>(i) * k + p];
      if (av == 0.0f) continue;
      const float* brow = b + static_cast<std::size_t>(p) * n;
      const __m512 avv = _mm512_set1_ps(av);
      int j = 0;
      for (; j + 16 <= n; j += 16) {
        _mm512_storeu_ps(crow + j,
                         _mm512_fmadd_ps(avv, _mm512_loadu_ps(brow + j), _mm512_loadu_ps(crow + j)));
      }
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

__attribute__((target("avx512f,fma"))) void gemm_nt_512(const float* a, const float* b, float* c,
                                                        int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * k;
      __m512 acc = _mm512_setzero_ps();
      int p = 0;
      for (; p + 16 <= k; p += 16)
        acc = _mm512_fmadd_ps(_mm512_loadu_ps(arow + p), _mm512_loadu_ps(brow + p), acc);
      float s = _mm512_reduce_add_ps(acc);
      for (; p < k; ++p) s += arow[p] * brow[p];
      c[static_cast<std::size_t>(i) * n + j] = s;
    }
  }
}

__attribute__((target("avx512f"))) void relu_512(float* x, std::size_t len) {
  const __m512 zero = _mm512_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= len; i += 16) _mm512_storeu_ps(x + i, _mm512_max_ps(zero, _mm512_loadu_ps(x + i)));
  for (; i < len; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

__attribute__((target("avx512f"))) void add_512(float* x, const float* y, std::size_t len) {
  std::size_t i = 0;
  for (; i + 16 <= len; i += 16)
    _mm512_storeu_ps(x + i, _mm512_add_ps(_mm512_loadu_ps(x + i), _mm512_loadu_ps(y + i)));
  for (; i < len; ++i) x[i] += y[i];
}

}  // namespace

const Ops* avx512_ops() {
  if (!__builtin_cpu_supports("avx512f") || !__builtin_cpu_supports("fma")) return nullptr;
  static const Ops ops{"avx512", kPanel,       gemm_512, gemm_nt_512,
                       gemm_packed_512, pack_b_512, relu_512, add_512};
  return &ops;
}

}  // namespace cwct::kernels

#else

namespace cwct::kernels {
const Ops* avx512_ops() { return nullptr; }
}  // namespace cwct::kernels

#endif
