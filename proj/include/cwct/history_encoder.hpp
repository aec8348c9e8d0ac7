#pragma once

#include <string>
#include <vector>

#include "cwct/config.hpp"
#include "cwct/matrix.hpp"
#include "cwct/weights.hpp"

namespace cwct {

// The N_w per-window summaries. Rows are zero until the owning window has
// been encoded at least once.
struct CompressedBank {
  Matrix summaries;                 // N_w x bank_dim
  std::vector<std::uint8_t> valid;  // per row

  CompressedBank() = default;
  CompressedBank(int windows, int dim)
      : summaries(windows, dim), valid(static_cast<std::size_t>(windows), 0) {}
};

// e = W_L x; the low-capacity history projection.
std::vector<float> project_history(std::span<const float> x, const WeightStore& w);

// One pre-LN residual attention layer over the tokens of a window. No
// positional encoding; history attention is position-free.
Matrix window_msa(const Matrix& tokens, const WeightStore& w, const std::string& prefix,
                  int heads, const AttentionMask* mask);

// Attention-weighted token reduction with channel doubling: n x c in,
// (n/r) x 2c out.
Matrix mtsm_reduce(const Matrix& tokens, const WeightStore& w, const std::string& prefix,
                   int heads, int reduction);

// Full per-window hierarchy: M x (window_msa, mtsm_reduce), then mean
// pooling. Stage weights are shared across windows.
std::vector<float> encode_window(const Matrix& window, const ModelConfig& cfg,
                                 const WeightStore& w);

// Encode `count` windows stacked row-wise (count * w x d_L) in one pass:
// per-window arithmetic identical to encode_window, but each stage weight
// is streamed once for the whole set. Returns one summary row per window.
Matrix encode_windows(const Matrix& stacked_windows, int count, const ModelConfig& cfg,
                      const WeightStore& w);

// Unmasked, position-free self-attention layers mixing the N_w summaries.
CompressedBank global_bank_attention(const CompressedBank& bank, const ModelConfig& cfg,
                                     const WeightStore& w);

}  // namespace cwct
