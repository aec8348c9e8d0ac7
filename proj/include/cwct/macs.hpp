#pragma once

#include "cwct/config.hpp"

namespace cwct {

// Multiply-accumulate counts derived symbolically from the config, so cost
// claims are hardware-free. Only matrix products are counted; layer norms,
// softmax and element-wise work are omitted on both sides of every ratio.
struct MacBreakdown {
  long long window_encoder = 0;  // encode_window calls
  long long bank_attention = 0;  // global summary mixing
  long long trend_path = 0;      // projections, trend attention, classifier, cascade

  long long total() const { return window_encoder + bank_attention + trend_path; }
};

// MACs of a single encode_window call.
long long encode_window_macs(const ModelConfig& cfg);

// Per-step cost of the circular engine (one window re-encoded) and the
// sliding baseline (all N_w re-encoded). Their window_encoder fields differ
// by exactly a factor of N_w; everything else is identical.
MacBreakdown circular_step_macs(const ModelConfig& cfg);
MacBreakdown sliding_step_macs(const ModelConfig& cfg);

}  // namespace cwct
