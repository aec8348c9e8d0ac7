#include "cwct/history_encoder.hpp"

#include <stdexcept>

#include "cwct/blocks.hpp"
#include "cwct/kernels.hpp"

namespace cwct {

std::vector<float> project_history(std::span<const float> x, const WeightStore& w) {
  const Matrix& W = w.get("cwhe.proj_hist");  // d_L x d
  if (static_cast<int>(x.size()) != W.cols)
    throw std::invalid_argument("project_history: input width " + std::to_string(x.size()) +
                                ", expected " + std::to_string(W.cols));
  Matrix out = matmul_nt(Matrix::from_row(x), W);
  return std::move(out.data);
}

Matrix window_msa(const Matrix& tokens, const WeightStore& w, const std::string& prefix,
                  int heads, const AttentionMask* mask) {
  if (tokens.cols % heads != 0)
    throw std::invalid_argument("window_msa: channel width not divisible by head count");
  return residual_sa_block(tokens, w, prefix, heads, mask);
}

namespace {

// mtsm_reduce over `groups` independent windows stacked row-wise. The
// linear projections are row-wise and run over the whole stack; the mixing
// weights are computed per window, so per-window results match a separate
// mtsm_reduce call exactly.
Matrix mtsm_reduce_grouped(const Matrix& tokens, const WeightStore& w, const std::string& prefix,
                           int heads, int reduction, int groups) {
  if (groups < 1 || tokens.rows % groups != 0)
    throw std::invalid_argument("mtsm_reduce: group count must divide the row count");
  const int n = tokens.rows / groups;
  const int c = tokens.cols;
  if (reduction < 1 || n % reduction != 0)
    throw std::invalid_argument("mtsm_reduce: token count not divisible by reduction rate");
  if ((2 * c) % heads != 0)
    throw std::invalid_argument("mtsm_reduce: output width not divisible by head count");
  const Matrix& reduce_w = w.get(prefix + ".reduce.w");
  if (reduce_w.rows != n / reduction)
    throw std::invalid_argument("mtsm_reduce: reduce matrix expects " +
                                std::to_string(reduce_w.rows * reduction) + " tokens, got " +
                                std::to_string(n));
  const int kept = n / reduction;

  Matrix concat(groups * kept, 2 * c);
  int col = 0;
  for (int i = 0; i < heads; ++i) {
    Matrix t = linear(tokens, w, prefix + ".head" + std::to_string(i) + ".wh", "");
    Matrix u = relu(linear(t, w, prefix + ".bottleneck.w", ""));
    Matrix scores(kept, n);
    Matrix head_out(kept, t.cols);
    for (int g = 0; g < groups; ++g) {
      // scores = W_r * relu(T W_c)^T, one row of mixing weights per kept token.
      kernels::active().gemm_nt(reduce_w.data.data(), u.row(g * n), scores.data.data(), kept,
                                reduce_w.cols, n);
      Matrix slim = masked_row_softmax(scores, nullptr, 1.0f);
      kernels::active().gemm(slim.data.data(), t.row(g * n), head_out.data.data(), kept, n,
                             t.cols);
      for (int r = 0; r < kept; ++r)
        std::copy(head_out.row(r), head_out.row(r) + head_out.cols,
                  concat.row(g * kept + r) + col);
    }
    col += head_out.cols;
  }
  return linear(concat, w, prefix + ".out.w", prefix + ".out.b");
}

}  // namespace

Matrix mtsm_reduce(const Matrix& tokens, const WeightStore& w, const std::string& prefix,
                   int heads, int reduction) {
  return mtsm_reduce_grouped(tokens, w, prefix, heads, reduction, 1);
}

std::vector<float> encode_window(const Matrix& window, const ModelConfig& cfg,
                                 const WeightStore& w) {
  if (window.rows != cfg.window_size() || window.cols != cfg.history_dim)
    throw std::invalid_argument("encode_window: window must be w x d_L");
  Matrix tokens = window;
  for (int s = 0; s < cfg.num_stages; ++s) {
    const std::string stage = "cwhe.stage" + std::to_string(s);
    tokens = window_msa(tokens, w, stage + ".msa", cfg.msa_heads, nullptr);
    tokens = mtsm_reduce(tokens, w, stage + ".mtsm", cfg.mtsm_heads, cfg.stage_reduction[s]);
  }
  return mean_pool_rows(tokens);
}

Matrix encode_windows(const Matrix& stacked_windows, int count, const ModelConfig& cfg,
                      const WeightStore& w) {
  if (count < 1 || stacked_windows.rows != count * cfg.window_size() ||
      stacked_windows.cols != cfg.history_dim)
    throw std::invalid_argument("encode_windows: input must be count * w x d_L");
  Matrix tokens = stacked_windows;
  int group = cfg.window_size();
  for (int s = 0; s < cfg.num_stages; ++s) {
    const std::string stage = "cwhe.stage" + std::to_string(s);
    if (tokens.cols % cfg.msa_heads != 0)
      throw std::invalid_argument("encode_windows: channel width not divisible by head count");
    tokens = residual_sa_block_grouped(tokens, w, stage + ".msa", cfg.msa_heads, group, nullptr);
    tokens = mtsm_reduce_grouped(tokens, w, stage + ".mtsm", cfg.mtsm_heads,
                                 cfg.stage_reduction[s], count);
    group /= cfg.stage_reduction[s];
  }
  Matrix out(count, tokens.cols);
  Matrix window(group, tokens.cols);
  for (int n = 0; n < count; ++n) {
    std::copy(tokens.row(n * group), tokens.row(n * group) + window.size(), window.data.begin());
    const auto pooled = mean_pool_rows(window);
    std::copy(pooled.begin(), pooled.end(), out.row(n));
  }
  return out;
}

CompressedBank global_bank_attention(const CompressedBank& bank, const ModelConfig& cfg,
                                     const WeightStore& w) {
  CompressedBank out = bank;
  for (int l = 0; l < cfg.global_sa_layers; ++l)
    out.summaries = residual_sa_block(out.summaries, w, "cwhe.global.layer" + std::to_string(l),
                                      cfg.msa_heads, nullptr);
  return out;
}

}  // namespace cwct
