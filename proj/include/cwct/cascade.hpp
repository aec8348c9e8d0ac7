#pragma once

#include <vector>

#include "cwct/config.hpp"
#include "cwct/matrix.hpp"
#include "cwct/weights.hpp"

namespace cwct {

// Clamp entries to >= 1e-8 and L1-normalize each row (or row softmax when
// the config selects the experimental alternative).
Matrix simplex_renormalize(const Matrix& probs, bool softmax_mode = false);

// Causal residual attention directly in probability space, then
// renormalization; repeated cascade_stages times with shared weights. With
// zero residual-path weights this is the identity on rows that sum to 1.
Matrix refine(const Matrix& coarse, const ModelConfig& cfg, const WeightStore& w);

// refine applied independently per history window with the SAME weights as
// the trend path.
std::vector<Matrix> refine_history_windows(const std::vector<Matrix>& windows,
                                           const ModelConfig& cfg, const WeightStore& w);

}  // namespace cwct
