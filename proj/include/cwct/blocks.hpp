#pragma once

#include <string>

#include "cwct/matrix.hpp"
#include "cwct/weights.hpp"

namespace cwct {

// Raw multi-head attention: per head, Q from q_in and K/V from kv_in via
// the head's projection matrices, softmax(Q K^T / sqrt(d_k)) V, heads
// concatenated and passed through the output projection. Head widths come
// from the stored tensor shapes.
Matrix multi_head_attention(const Matrix& q_in, const Matrix& kv_in, const WeightStore& w,
                            const std::string& prefix, int heads, const AttentionMask* mask);

// Block-diagonal variant: the rows of q_in are G independent sequences of
// q_group rows each, kv_in holds the matching G sequences of kv_group rows.
// Projections run over the whole stack (each weight tensor is streamed
// once), scores and mixing stay within a sequence, so output group g
// depends only on query group g and kv group g. Per-row arithmetic is
// identical to calling multi_head_attention on each group separately. The
// optional mask is q_group x kv_group and applies to every group.
Matrix multi_head_attention_grouped(const Matrix& q_in, const Matrix& kv_in, const WeightStore& w,
                                    const std::string& prefix, int heads, int q_group,
                                    int kv_group, const AttentionMask* mask);

// linear -> ReLU -> linear under {prefix}.ffn.*
Matrix ffn_forward(const Matrix& x, const WeightStore& w, const std::string& prefix);

// Pre-normalization residual unit: y = x + MHA(LN1(x)); z = y + FFN(LN2(y)).
Matrix residual_sa_block(const Matrix& x, const WeightStore& w, const std::string& prefix,
                         int heads, const AttentionMask* mask);

// Same, with keys/values drawn from a separate (LNkv-normalized) sequence.
Matrix residual_cross_block(const Matrix& x, const Matrix& kv, const WeightStore& w,
                            const std::string& prefix, int heads);

// Grouped residual units: x (and kv) carry stacked independent sequences as
// in multi_head_attention_grouped; norms, residuals and the FFN are
// row-wise, so only the attention needs the group structure.
Matrix residual_sa_block_grouped(const Matrix& x, const WeightStore& w, const std::string& prefix,
                                 int heads, int group, const AttentionMask* mask);
Matrix residual_cross_block_grouped(const Matrix& x, const Matrix& kv, const WeightStore& w,
                                    const std::string& prefix, int heads, int q_group,
                                    int kv_group);

}  // namespace cwct
