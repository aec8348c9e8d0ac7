#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cwct/config.hpp"
#include "cwct/history_encoder.hpp"
#include "cwct/matrix.hpp"
#include "cwct/weights.hpp"

namespace cwct {

struct ComputeCounters {
  long long window_encodes = 0;
  long long bank_attentions = 0;
  long long steps = 0;
};

struct StepResult {
  std::vector<float> coarse;   // trend-path distribution for the newest frame
  std::vector<float> refined;  // after the cascade
  ComputeCounters counters;    // snapshot taken after the step
};

// Everything downstream of the per-window summaries: bank mixing, trend
// attention, classification, cascade. Shared verbatim by the streaming
// step, the batch oracle, and the sliding baseline, so any divergence
// between modes can only come from the summaries that were fed in.
struct DownstreamResult {
  CompressedBank global_bank;  // post-mixing, N_w x bank_dim
  Matrix coarse;               // m_S x N_a
  Matrix refined;              // m_S x N_a
};
DownstreamResult run_downstream(const CompressedBank& raw_bank, const Matrix& trend_with_positions,
                                const ModelConfig& cfg, const WeightStore& w);

struct BatchResult {
  Matrix coarse;   // m_S x N_a, one row per trend position
  Matrix refined;  // m_S x N_a
  // Filled only when requested: decoder output classified per history frame.
  Matrix oas_coarse;   // m_L x N_a
  Matrix oas_refined;  // m_L x N_a
  int window_encodes = 0;  // always N_w: every summary is recomputed
};

// Streaming inference state: a ring of m_L projected history frames, the
// short trend queue, and one cached summary per window. Each step touches
// exactly one window. Not safe for concurrent step() calls on the same
// instance; batch_forward is const and pure.
class Engine {
 public:
  // Warm start: zero history, every window summary computed once from the
  // zero padding (counted), trend empty, cursor 0.
  Engine(const ModelConfig& cfg, const WeightStore& w);

  StepResult step(std::span<const float> x);

  // Recomputes every window summary from the current ring contents (cache
  // ignored) and runs the identical downstream pipeline. The correctness
  // oracle for the cache. with_oas additionally decodes the bank back to
  // m_L frames and classifies/refines them.
  BatchResult batch_forward(bool with_oas = false) const;

  // One streaming step plus the batch oracle in a single fused pass. The
  // cached bank and a freshly recomputed bank travel as independent lanes
  // of the grouped downstream, so each weight tensor is streamed once per
  // step instead of twice; every output is bit-identical to calling step()
  // followed by batch_forward(). Counters advance exactly as in step() —
  // the oracle-side re-encodes are diagnostic and uncounted.
  struct CheckedStep {
    StepResult live;
    std::vector<float> oracle_coarse;   // last row of batch_forward().coarse
    std::vector<float> oracle_refined;  // last row of batch_forward().refined
  };
  CheckedStep step_checked(std::span<const float> x);

  const ModelConfig& config() const { return cfg_; }
  const WeightStore& weights() const { return *weights_; }
  const ComputeCounters& counters() const { return counters_; }
  int cursor() const { return cursor_; }
  const Matrix& slots() const { return slots_; }
  const CompressedBank& cached_bank() const { return cache_; }
  int trend_fill() const { return static_cast<int>(trend_.size()); }

  // The m_S x d_S trend matrix the next inference will see (front-padded
  // with the earliest queued frame), without positional terms.
  Matrix padded_trend() const;

  // Debug/fault-injection: perturb one cached summary without touching the
  // ring, so cache and slots disagree.
  void corrupt_summary(int window, float delta);
  // Relabel ring slots by a rotation of k whole windows; summaries, flags
  // and cursor move along. Semantically a no-op up to bank row order.
  void rotate_whole_windows(int k);
  // Max-abs difference between each cached summary and one recomputed from
  // the slots; localizes a corrupted window.
  std::vector<float> summary_residuals() const;

  // Snapshot the mutable state (not the weights) in the weight-container
  // format under reserved "state.*" names.
  void dump_state(std::ostream& out) const;
  void dump_state(const std::string& path) const;
  void restore_state(std::istream& in);
  void restore_state(const std::string& path);

 private:
  void ingest_frame(std::span<const float> x);
  void refresh_dirty_windows();

  ModelConfig cfg_;
  const WeightStore* weights_;
  Matrix slots_;  // m_L x d_L, ring-indexed: window n owns rows [n*w, (n+1)*w)
  std::deque<std::vector<float>> trend_;      // projected, d_S each
  std::deque<std::vector<float>> trend_raw_;  // raw inputs awaiting eviction, d each
  int cursor_ = 0;
  CompressedBank cache_;  // pre-mixing summaries, one row per window
  std::vector<std::uint8_t> dirty_;
  ComputeCounters counters_;
  Matrix positions_;  // m_S x d_S sinusoids, fixed
};

// Cost baseline: the same model with a temporally-ordered queue instead of
// a ring, re-encoding all N_w windows every step. Predictions match the
// circular engine whenever its cursor sits on a window boundary.
class SlidingEngine {
 public:
  SlidingEngine(const ModelConfig& cfg, const WeightStore& w);

  StepResult step(std::span<const float> x);

  const ComputeCounters& counters() const { return counters_; }

 private:
  ModelConfig cfg_;
  const WeightStore* weights_;
  Matrix history_;  // m_L x d_L, oldest frame in row 0
  std::deque<std::vector<float>> trend_;
  std::deque<std::vector<float>> trend_raw_;
  ComputeCounters counters_;
  Matrix positions_;
};

}  // namespace cwct
