#include "cwct/history_decoder.hpp"

#include <stdexcept>

#include "cwct/blocks.hpp"

namespace cwct {

Matrix swin_block(const Matrix& tokens, const WeightStore& w, const std::string& prefix,
                  int heads, int window, int shift) {
  const int n = tokens.rows;
  if (window < 1 || n % window != 0)
    throw std::invalid_argument("swin_block: window must divide the token count");
  if (shift < 0 || shift >= window)
    throw std::invalid_argument("swin_block: shift must lie in [0, window)");

  Matrix rotated(n, tokens.cols);
  for (int i = 0; i < n; ++i) {
    const int src = (i + shift) % n;
    std::copy(tokens.row(src), tokens.row(src) + tokens.cols, rotated.row(i));
  }

  Matrix res = residual_sa_block_grouped(rotated, w, prefix, heads, window, nullptr);
  // undo the rotation while scattering the groups back
  Matrix out(n, tokens.cols);
  for (int i = 0; i < n; ++i) {
    const int dst = (i + shift) % n;
    std::copy(res.row(i), res.row(i) + res.cols, out.row(dst));
  }
  return out;
}

Matrix mtsm_expand(const Matrix& tokens, const WeightStore& w, const std::string& prefix,
                   int heads, int expansion) {
  const int n = tokens.rows;
  const int c = tokens.cols;
  if (expansion < 1) throw std::invalid_argument("mtsm_expand: expansion must be >= 1");
  if (c % heads != 0)
    throw std::invalid_argument("mtsm_expand: channel width not divisible by head count");
  const Matrix& expand_w = w.get(prefix + ".expand.w");
  if (expand_w.rows != n * expansion)
    throw std::invalid_argument("mtsm_expand: expand matrix expects " +
                                std::to_string(expand_w.rows / expansion) + " tokens, got " +
                                std::to_string(n));

  Matrix concat(n * expansion, c);
  int col = 0;
  for (int i = 0; i < heads; ++i) {
    Matrix t = linear(tokens, w, prefix + ".head" + std::to_string(i) + ".wh", "");
    Matrix u = relu(linear(t, w, prefix + ".bottleneck.w", ""));
    Matrix mix = masked_row_softmax(matmul_nt(expand_w, u), nullptr, 1.0f);
    Matrix head_out = matmul(mix, t);
    for (int r = 0; r < head_out.rows; ++r)
      std::copy(head_out.row(r), head_out.row(r) + head_out.cols, concat.row(r) + col);
    col += head_out.cols;
  }
  return linear(concat, w, prefix + ".out.w", prefix + ".out.b");
}

Matrix decode(const CompressedBank& bank, const ModelConfig& cfg, const WeightStore& w,
              std::vector<int>* token_trace) {
  Matrix tokens = bank.summaries;
  if (token_trace) token_trace->clear();
  for (std::size_t s = 0; s < cfg.decoder_swin_layers.size(); ++s) {
    if (token_trace) token_trace->push_back(tokens.rows);
    const std::string stage = "swhd.stage" + std::to_string(s);
    for (int l = 0; l < cfg.decoder_swin_layers[s]; ++l) {
      const int shift = (l % 2 == 1) ? cfg.decoder_window_size / 2 : 0;
      tokens = swin_block(tokens, w, stage + ".swin" + std::to_string(l), cfg.msa_heads,
                          cfg.decoder_window_size, shift);
    }
    if (s < cfg.decoder_expansion.size()) {
      tokens = mtsm_expand(tokens, w, stage + ".expand", cfg.mtsm_heads, cfg.decoder_expansion[s]);
      tokens = swin_block(tokens, w, stage + ".align", cfg.msa_heads, cfg.decoder_window_size, 0);
    }
  }
  if (tokens.rows != cfg.history_len)
    throw std::logic_error("decode: expansion plan does not restore m_L rows");
  return tokens;
}

}  // namespace cwct
