#include "cwct/blocks.hpp"

#include <cmath>
#include <stdexcept>

#include "cwct/kernels.hpp"

namespace cwct {

Matrix multi_head_attention_grouped(const Matrix& q_in, const Matrix& kv_in, const WeightStore& w,
                                    const std::string& prefix, int heads, int q_group,
                                    int kv_group, const AttentionMask* mask) {
  const int c = q_in.cols;
  if (kv_in.cols != c) throw std::invalid_argument(prefix + ": query/key width mismatch");
  if (q_group < 1 || q_in.rows % q_group != 0)
    throw std::invalid_argument(prefix + ": query group must divide the row count");
  const int groups = q_in.rows / q_group;
  if (kv_group < 1 || kv_in.rows != groups * kv_group)
    throw std::invalid_argument(prefix + ": kv rows do not match the group count");
  if (mask && (mask->rows != q_group || mask->cols != kv_group))
    throw std::invalid_argument(prefix + ": mask shape must be q_group x kv_group");

  Matrix concat(q_in.rows, c);
  int col = 0;
  for (int i = 0; i < heads; ++i) {
    const std::string head = prefix + ".head" + std::to_string(i);
    Matrix q = linear(q_in, w, head + ".wq", "");
    Matrix k = linear(kv_in, w, head + ".wk", "");
    Matrix v = linear(kv_in, w, head + ".wv", "");
    const float scale = std::sqrt(static_cast<float>(q.cols));
    Matrix scores(q_group, kv_group);
    Matrix head_out(q_group, q.cols);
    for (int g = 0; g < groups; ++g) {
      kernels::active().gemm_nt(q.row(g * q_group), k.row(g * kv_group), scores.data.data(),
                                q_group, q.cols, kv_group);
      Matrix attn = masked_row_softmax(scores, mask, scale);
      kernels::active().gemm(attn.data.data(), v.row(g * kv_group), head_out.data.data(), q_group,
                             kv_group, q.cols);
      for (int r = 0; r < q_group; ++r)
        std::copy(head_out.row(r), head_out.row(r) + head_out.cols,
                  concat.row(g * q_group + r) + col);
    }
    col += q.cols;
  }
  if (col != c) throw std::invalid_argument(prefix + ": head widths do not cover the channel");
  return linear(concat, w, prefix + ".out.w", prefix + ".out.b");
}

Matrix multi_head_attention(const Matrix& q_in, const Matrix& kv_in, const WeightStore& w,
                            const std::string& prefix, int heads, const AttentionMask* mask) {
  return multi_head_attention_grouped(q_in, kv_in, w, prefix, heads, q_in.rows, kv_in.rows, mask);
}

Matrix ffn_forward(const Matrix& x, const WeightStore& w, const std::string& prefix) {
  Matrix h = linear(x, w, prefix + ".ffn.w1", prefix + ".ffn.b1");
  kernels::active().relu(h.data.data(), h.data.size());
  return linear(h, w, prefix + ".ffn.w2", prefix + ".ffn.b2");
}

namespace {

Matrix ln(const Matrix& x, const WeightStore& w, const std::string& gain,
          const std::string& bias) {
  return layer_normalize(x, w.get(gain).row_span(0), w.get(bias).row_span(0));
}

}  // namespace

Matrix residual_sa_block_grouped(const Matrix& x, const WeightStore& w, const std::string& prefix,
                                 int heads, int group, const AttentionMask* mask) {
  Matrix h = ln(x, w, prefix + ".ln1.gain", prefix + ".ln1.bias");
  Matrix y = x;
  add_inplace(y, multi_head_attention_grouped(h, h, w, prefix, heads, group, group, mask));
  Matrix h2 = ln(y, w, prefix + ".ln2.gain", prefix + ".ln2.bias");
  add_inplace(y, ffn_forward(h2, w, prefix));
  return y;
}

Matrix residual_cross_block_grouped(const Matrix& x, const Matrix& kv, const WeightStore& w,
                                    const std::string& prefix, int heads, int q_group,
                                    int kv_group) {
  Matrix hq = ln(x, w, prefix + ".ln1.gain", prefix + ".ln1.bias");
  Matrix hkv = ln(kv, w, prefix + ".lnkv.gain", prefix + ".lnkv.bias");
  Matrix y = x;
  add_inplace(y,
              multi_head_attention_grouped(hq, hkv, w, prefix, heads, q_group, kv_group, nullptr));
  Matrix h2 = ln(y, w, prefix + ".ln2.gain", prefix + ".ln2.bias");
  add_inplace(y, ffn_forward(h2, w, prefix));
  return y;
}

Matrix residual_sa_block(const Matrix& x, const WeightStore& w, const std::string& prefix,
                         int heads, const AttentionMask* mask) {
  return residual_sa_block_grouped(x, w, prefix, heads, x.rows, mask);
}

Matrix residual_cross_block(const Matrix& x, const Matrix& kv, const WeightStore& w,
                            const std::string& prefix, int heads) {
  return residual_cross_block_grouped(x, kv, w, prefix, heads, x.rows, kv.rows);
}

}  // namespace cwct
