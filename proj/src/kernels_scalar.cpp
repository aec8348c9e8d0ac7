#include "cwct/kernels.hpp"

#include <cstring>

namespace cwct::kernels {
namespace {

// ikj order: per output element the k-sum runs strictly left to right.
void gemm_scalar(const float* a, const float* b, float* c, int m, int k, int n) {
  std::memset(c, 0, sizeof(float) * static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const float av = a[static_cast<std::size_t>(i) * k + p];
      const float* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt_scalar(const float* a, const float* b, float* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const float* brow = b + static_cast<std::size_t>(j) * k;
      float s = 0.0f;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[static_cast<std::size_t>(i) * n + j] = s;
    }
  }
}

void relu_scalar(float* x, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void add_scalar(float* x, const float* y, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) x[i] += y[i];
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar", 0, gemm_scalar, gemm_nt_scalar,
                       nullptr,  nullptr, relu_scalar,    add_scalar};
  return ops;
}

}  // namespace cwct::kernels
