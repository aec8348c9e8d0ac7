#include "cwct/trend_encoder.hpp"

#include <stdexcept>

#include "cwct/blocks.hpp"

namespace cwct {

std::vector<float> project_trend(std::span<const float> x, const WeightStore& w) {
  const Matrix& W = w.get("cwe.proj_trend");  // d_S x d
  if (static_cast<int>(x.size()) != W.cols)
    throw std::invalid_argument("project_trend: input width " + std::to_string(x.size()) +
                                ", expected " + std::to_string(W.cols));
  Matrix out = matmul_nt(Matrix::from_row(x), W);
  return std::move(out.data);
}

Matrix causal_self_attention(const Matrix& trend, const ModelConfig& cfg, const WeightStore& w) {
  const AttentionMask mask = AttentionMask::causal(trend.rows);
  Matrix x = trend;
  for (int l = 0; l < cfg.trend_sa_layers; ++l)
    x = residual_sa_block(x, w, "cwe.causal.layer" + std::to_string(l), cfg.msa_heads, &mask);
  return x;
}

Matrix cross_attend_bank(const Matrix& trend, const Matrix& bank, const ModelConfig& cfg,
                         const WeightStore& w) {
  if (bank.cols != trend.cols)
    throw std::invalid_argument("cross_attend_bank: bank width " + std::to_string(bank.cols) +
                                " does not match trend width " + std::to_string(trend.cols));
  const AttentionMask mask = AttentionMask::causal(trend.rows);
  Matrix x = trend;
  for (int m = 0; m < cfg.trend_ca_modules; ++m) {
    const std::string mod = "cwe.cross" + std::to_string(m);
    x = residual_sa_block(x, w, mod + ".self", cfg.msa_heads, &mask);
    x = residual_cross_block(x, bank, w, mod + ".cross", cfg.msa_heads);
  }
  return x;
}

Matrix classify(const Matrix& features, const WeightStore& w) {
  Matrix logits = linear(features, w, "classifier.w", "classifier.b");
  return masked_row_softmax(logits, nullptr, 1.0f);
}

CompressedBank build_shifted_banks(const Matrix& history, int shift, const ModelConfig& cfg,
                                   const WeightStore& w) {
  const int m_l = cfg.history_len;
  const int win = cfg.window_size();
  if (history.rows != m_l || history.cols != cfg.history_dim)
    throw std::invalid_argument("build_shifted_banks: history must be m_L x d_L");
  if (shift < 0 || shift >= win)
    throw std::invalid_argument("build_shifted_banks: shift must lie in [0, w)");

  CompressedBank bank(cfg.num_windows, cfg.bank_dim());
  Matrix window(win, cfg.history_dim);
  for (int n = 0; n < cfg.num_windows; ++n) {
    for (int t = 0; t < win; ++t) {
      const int src = ((n * win - shift + t) % m_l + m_l) % m_l;
      std::copy(history.row(src), history.row(src) + history.cols, window.row(t));
    }
    const auto summary = encode_window(window, cfg, w);
    std::copy(summary.begin(), summary.end(), bank.summaries.row(n));
    bank.valid[n] = 1;
  }
  return global_bank_attention(bank, cfg, w);
}

}  // namespace cwct
