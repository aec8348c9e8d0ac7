#pragma once

#include <string>
#include <vector>

#include "cwct/config.hpp"
#include "cwct/history_encoder.hpp"
#include "cwct/matrix.hpp"
#include "cwct/weights.hpp"

namespace cwct {

// Shifted-window attention: tokens cyclically rotated by `shift`,
// partitioned into groups of `window`, one residual attention layer per
// group (shared weights), rotation undone.
Matrix swin_block(const Matrix& tokens, const WeightStore& w, const std::string& prefix,
                  int heads, int window, int shift);

// Token up-sampling: the slimming machinery with an (n*k) x n mixing
// matrix computed over all tokens jointly; channel width is preserved.
Matrix mtsm_expand(const Matrix& tokens, const WeightStore& w, const std::string& prefix,
                   int heads, int expansion);

// Expand the bank back to m_L rows. Each stage runs its Swin layers
// (alternating half-window shift), then, except in the last stage, an
// expansion and one aligning Swin layer. token_trace, when given, receives
// the token count entering each stage.
Matrix decode(const CompressedBank& bank, const ModelConfig& cfg, const WeightStore& w,
              std::vector<int>* token_trace = nullptr);

}  // namespace cwct
