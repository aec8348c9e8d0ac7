#include "cwct/cascade.hpp"

#include <stdexcept>

#include "cwct/blocks.hpp"

namespace cwct {

Matrix simplex_renormalize(const Matrix& probs, bool softmax_mode) {
  if (softmax_mode) return masked_row_softmax(probs, nullptr, 1.0f);
  Matrix out(probs.rows, probs.cols);
  for (int i = 0; i < probs.rows; ++i) {
    float sum = 0.0f;
    for (int j = 0; j < probs.cols; ++j) {
      const float v = probs.at(i, j) > 1e-8f ? probs.at(i, j) : 1e-8f;
      out.at(i, j) = v;
      sum += v;
    }
    for (int j = 0; j < probs.cols; ++j) out.at(i, j) /= sum;
  }
  return out;
}

Matrix refine(const Matrix& coarse, const ModelConfig& cfg, const WeightStore& w) {
  if (coarse.cols != cfg.num_actions)
    throw std::invalid_argument("refine: expected " + std::to_string(cfg.num_actions) +
                                " probability columns");
  const AttentionMask mask = AttentionMask::causal(coarse.rows);
  Matrix p = coarse;
  for (int stage = 0; stage < cfg.cascade_stages; ++stage) {
    for (int l = 0; l < cfg.cascade_sa_layers; ++l)
      p = residual_sa_block(p, w, "cascade.layer" + std::to_string(l), cfg.cascade_heads(), &mask);
    p = simplex_renormalize(p, cfg.cascade_softmax_renorm);
  }
  return p;
}

std::vector<Matrix> refine_history_windows(const std::vector<Matrix>& windows,
                                           const ModelConfig& cfg, const WeightStore& w) {
  std::vector<Matrix> out;
  out.reserve(windows.size());
  for (const Matrix& win : windows) {
    if (win.rows != cfg.window_size())
      throw std::invalid_argument("refine_history_windows: each window must have w rows");
    out.push_back(refine(win, cfg, w));
  }
  return out;
}

}  // namespace cwct
