#pragma once

#include <vector>

#include "cwct/config.hpp"
#include "cwct/history_encoder.hpp"
#include "cwct/matrix.hpp"
#include "cwct/weights.hpp"

namespace cwct {

// e = W_S x; the full-capacity trend projection.
std::vector<float> project_trend(std::span<const float> x, const WeightStore& w);

// L_S causal residual attention layers. Callers add sinusoidal positions
// before the first layer.
Matrix causal_self_attention(const Matrix& trend, const ModelConfig& cfg, const WeightStore& w);

// trend_ca_modules blocks; each is one causal self-attention layer
// followed by cross-attention with the bank rows as keys/values.
Matrix cross_attend_bank(const Matrix& trend, const Matrix& bank, const ModelConfig& cfg,
                         const WeightStore& w);

// Shared linear classifier followed by a row softmax. The same parameters
// serve the trend (OAD) and decoder (OAS) branches.
Matrix classify(const Matrix& features, const WeightStore& w);

// Partition an ordered m_L x d_L history with circular boundary offset
// `shift` (0 <= shift < w), encode every window and mix the bank. Aligns
// batch evaluation with the partition a streaming ring at that offset sees.
CompressedBank build_shifted_banks(const Matrix& history, int shift, const ModelConfig& cfg,
                                   const WeightStore& w);

}  // namespace cwct
