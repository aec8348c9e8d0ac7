#pragma once

#include <cstddef>
#include <vector>

namespace cwct::kernels {

// C (m x n) = A (m x k) * B (k x n), all row-major, C overwritten.
using GemmFn = void (*)(const float* a, const float* b, float* c, int m, int k, int n);

// One kernel variant. Scalar is the reference; SIMD variants are
// equivalence-tested against it and selected at runtime.
struct Ops {
  const char* name;
  // Width in floats of one packed column panel, 0 when the variant has no
  // packed path. Packing rearranges a constant B (weights) once so the
  // inner loop streams contiguous panels.
  int panel;
  GemmFn gemm;
  GemmFn gemm_nt;      // B passed as (n x k); computes A * B^T
  GemmFn gemm_packed;  // B must come from pack_b of the same variant
  void (*pack_b)(const float* b, float* bp, int k, int n);
  void (*relu)(float* x, std::size_t len);
  void (*add)(float* x, const float* y, std::size_t len);  // x += y
};

const Ops& scalar_ops();
const Ops* avx2_ops();    // null when the CPU lacks AVX2+FMA
const Ops* avx512_ops();  // null when the CPU lacks AVX-512F
const Ops* neon_ops();    // null off aarch64

// Chosen once per process: best supported variant, overridable with
// CWCT_KERNELS=scalar|avx2|avx512|neon. A fixed choice keeps every code
// path in a run bit-comparable with every other.
const Ops& active();

// All variants runnable on this machine (scalar first).
std::vector<const Ops*> available();

std::size_t packed_floats(const Ops& o, int k, int n);

}  // namespace cwct::kernels
