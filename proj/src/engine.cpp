#include "cwct/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cwct/blocks.hpp"
#include "cwct/cascade.hpp"
#include "cwct/history_decoder.hpp"
#include "cwct/trend_encoder.hpp"

namespace cwct {

DownstreamResult run_downstream(const CompressedBank& raw_bank, const Matrix& trend_with_positions,
                                const ModelConfig& cfg, const WeightStore& w) {
  DownstreamResult r;
  r.global_bank = global_bank_attention(raw_bank, cfg, w);
  Matrix x = causal_self_attention(trend_with_positions, cfg, w);
  x = cross_attend_bank(x, r.global_bank.summaries, cfg, w);
  r.coarse = classify(x, w);
  r.refined = refine(r.coarse, cfg, w);
  return r;
}

namespace {

// Front-pad a short queue by repeating its earliest entry so the newest
// frame always lands on the last row (keeps positional phase stable while
// the stream warms up). An empty queue yields zeros.
Matrix pad_queue(const std::deque<std::vector<float>>& q, int rows, int cols) {
  Matrix out(rows, cols);
  if (q.empty()) return out;
  const int fill = static_cast<int>(q.size());
  for (int i = 0; i < rows; ++i) {
    const std::vector<float>& src = i < rows - fill ? q.front() : q[i - (rows - fill)];
    std::copy(src.begin(), src.end(), out.row(i));
  }
  return out;
}

void append_frame(std::deque<std::vector<float>>& trend, std::deque<std::vector<float>>& raw,
                  std::span<const float> x, const WeightStore& w) {
  trend.push_back(project_trend(x, w));
  raw.emplace_back(x.begin(), x.end());
}

Matrix window_of(const Matrix& slots, int n, int w_size) {
  Matrix win(w_size, slots.cols);
  std::copy(slots.row(n * w_size), slots.row(n * w_size) + w_size * slots.cols, win.data.begin());
  return win;
}

std::vector<float> last_row(const Matrix& m) {
  return {m.row(m.rows - 1), m.row(m.rows - 1) + m.cols};
}

}  // namespace

Engine::Engine(const ModelConfig& cfg, const WeightStore& w)
    : cfg_(cfg),
      weights_(&w),
      slots_(cfg.history_len, cfg.history_dim),
      cache_(cfg.num_windows, cfg.bank_dim()),
      dirty_(static_cast<std::size_t>(cfg.num_windows), 0),
      positions_(sinusoidal_positions(cfg.trend_len, cfg.trend_dim)) {
  const auto problems = validate(cfg);
  if (!problems.empty()) throw std::invalid_argument("Engine: invalid config: " + problems.front());
  check_store(cfg, w);
  // Warmup: every summary computed once from the zero-filled ring.
  cache_.summaries = encode_windows(slots_, cfg_.num_windows, cfg_, *weights_);
  std::fill(cache_.valid.begin(), cache_.valid.end(), 1);
  counters_.window_encodes += cfg_.num_windows;
}

void Engine::ingest_frame(std::span<const float> x) {
  append_frame(trend_, trend_raw_, x, *weights_);
  if (static_cast<int>(trend_.size()) > cfg_.trend_len) {
    const std::vector<float> evicted = std::move(trend_raw_.front());
    trend_raw_.pop_front();
    trend_.pop_front();
    const auto e = project_history(evicted, *weights_);
    std::copy(e.begin(), e.end(), slots_.row(cursor_));
    dirty_[cursor_ / cfg_.window_size()] = 1;
    cursor_ = (cursor_ + 1) % cfg_.history_len;
  }
}

void Engine::refresh_dirty_windows() {
  for (int n = 0; n < cfg_.num_windows; ++n) {
    if (!dirty_[n]) continue;
    const auto summary = encode_window(window_of(slots_, n, cfg_.window_size()), cfg_, *weights_);
    std::copy(summary.begin(), summary.end(), cache_.summaries.row(n));
    dirty_[n] = 0;
    ++counters_.window_encodes;
  }
}

Matrix Engine::padded_trend() const { return pad_queue(trend_, cfg_.trend_len, cfg_.trend_dim); }

StepResult Engine::step(std::span<const float> x) {
  ingest_frame(x);
  refresh_dirty_windows();

  Matrix trend = padded_trend();
  add_inplace(trend, positions_);
  DownstreamResult down = run_downstream(cache_, trend, cfg_, *weights_);
  ++counters_.bank_attentions;
  ++counters_.steps;

  StepResult r;
  r.coarse = last_row(down.coarse);
  r.refined = last_row(down.refined);
  r.counters = counters_;
  return r;
}

Engine::CheckedStep Engine::step_checked(std::span<const float> x) {
  ingest_frame(x);
  // Window n of the ring owns slot rows [n*w, (n+1)*w), so the ring itself
  // is already the stacked window set the batch oracle encodes. A dirty
  // window's refreshed cache entry is that same encode of the same slots,
  // so it is taken from the fresh batch instead of being computed twice;
  // clean windows keep their cached rows and are still checked against the
  // recomputation.
  const Matrix fresh = encode_windows(slots_, cfg_.num_windows, cfg_, *weights_);
  for (int n = 0; n < cfg_.num_windows; ++n) {
    if (!dirty_[n]) continue;
    std::copy(fresh.row(n), fresh.row(n) + fresh.cols, cache_.summaries.row(n));
    dirty_[n] = 0;
    ++counters_.window_encodes;
  }

  // Lane 0 carries the cached summaries, lane 1 the fresh recomputation.
  Matrix banks(2 * cfg_.num_windows, cfg_.bank_dim());
  std::copy(cache_.summaries.data.begin(), cache_.summaries.data.end(), banks.data.begin());
  std::copy(fresh.data.begin(), fresh.data.end(), banks.row(cfg_.num_windows));
  for (int l = 0; l < cfg_.global_sa_layers; ++l)
    banks = residual_sa_block_grouped(banks, *weights_, "cwhe.global.layer" + std::to_string(l),
                                      cfg_.msa_heads, cfg_.num_windows, nullptr);

  // Both lanes see the identical trend input, and they stay identical until
  // the first attention over the banks: the causal stack and the first
  // cross module's self-attention are computed once and duplicated.
  Matrix trend = padded_trend();
  add_inplace(trend, positions_);
  const AttentionMask mask = AttentionMask::causal(cfg_.trend_len);
  Matrix shared = causal_self_attention(trend, cfg_, *weights_);
  if (cfg_.trend_ca_modules > 0)
    shared = residual_sa_block_grouped(shared, *weights_, "cwe.cross0.self", cfg_.msa_heads,
                                       cfg_.trend_len, &mask);
  Matrix xq(2 * cfg_.trend_len, cfg_.trend_dim);
  std::copy(shared.data.begin(), shared.data.end(), xq.data.begin());
  std::copy(shared.data.begin(), shared.data.end(), xq.row(cfg_.trend_len));

  for (int m = 0; m < cfg_.trend_ca_modules; ++m) {
    const std::string mod = "cwe.cross" + std::to_string(m);
    if (m > 0)
      xq = residual_sa_block_grouped(xq, *weights_, mod + ".self", cfg_.msa_heads, cfg_.trend_len,
                                     &mask);
    xq = residual_cross_block_grouped(xq, banks, *weights_, mod + ".cross", cfg_.msa_heads,
                                      cfg_.trend_len, cfg_.num_windows);
  }
  const Matrix coarse = classify(xq, *weights_);
  Matrix live_coarse(cfg_.trend_len, cfg_.num_actions);
  Matrix oracle_coarse(cfg_.trend_len, cfg_.num_actions);
  std::copy(coarse.data.begin(), coarse.data.begin() + live_coarse.size(),
            live_coarse.data.begin());
  std::copy(coarse.data.begin() + live_coarse.size(), coarse.data.end(),
            oracle_coarse.data.begin());
  const Matrix live_refined = refine(live_coarse, cfg_, *weights_);
  const Matrix oracle_refined = refine(oracle_coarse, cfg_, *weights_);

  ++counters_.bank_attentions;
  ++counters_.steps;

  CheckedStep r;
  r.live.coarse = last_row(live_coarse);
  r.live.refined = last_row(live_refined);
  r.live.counters = counters_;
  r.oracle_coarse = last_row(oracle_coarse);
  r.oracle_refined = last_row(oracle_refined);
  return r;
}

BatchResult Engine::batch_forward(bool with_oas) const {
  CompressedBank fresh(cfg_.num_windows, cfg_.bank_dim());
  fresh.summaries = encode_windows(slots_, cfg_.num_windows, cfg_, *weights_);
  std::fill(fresh.valid.begin(), fresh.valid.end(), 1);

  Matrix trend = padded_trend();
  add_inplace(trend, positions_);
  DownstreamResult down = run_downstream(fresh, trend, cfg_, *weights_);

  BatchResult r;
  r.coarse = std::move(down.coarse);
  r.refined = std::move(down.refined);
  r.window_encodes = cfg_.num_windows;
  if (with_oas) {
    Matrix decoded = decode(down.global_bank, cfg_, *weights_);
    r.oas_coarse = classify(decoded, *weights_);
    std::vector<Matrix> windows;
    windows.reserve(cfg_.num_windows);
    for (int n = 0; n < cfg_.num_windows; ++n)
      windows.push_back(window_of(r.oas_coarse, n, cfg_.window_size()));
    const auto refined = refine_history_windows(windows, cfg_, *weights_);
    r.oas_refined = Matrix(cfg_.history_len, cfg_.num_actions);
    for (int n = 0; n < cfg_.num_windows; ++n)
      std::copy(refined[n].data.begin(), refined[n].data.end(),
                r.oas_refined.row(n * cfg_.window_size()));
  }
  return r;
}

void Engine::corrupt_summary(int window, float delta) {
  if (window < 0 || window >= cfg_.num_windows)
    throw std::invalid_argument("corrupt_summary: window out of range");
  cache_.summaries.at(window, 0) += delta;
}

void Engine::rotate_whole_windows(int k) {
  const int nw = cfg_.num_windows;
  k = ((k % nw) + nw) % nw;
  if (k == 0) return;
  const int shift = k * cfg_.window_size();

  Matrix slots(slots_.rows, slots_.cols);
  for (int i = 0; i < slots_.rows; ++i) {
    const int src = (i + shift) % slots_.rows;
    std::copy(slots_.row(src), slots_.row(src) + slots_.cols, slots.row(i));
  }
  slots_ = std::move(slots);

  CompressedBank cache(nw, cfg_.bank_dim());
  std::vector<std::uint8_t> dirty(nw, 0);
  for (int n = 0; n < nw; ++n) {
    const int src = (n + k) % nw;
    std::copy(cache_.summaries.row(src), cache_.summaries.row(src) + cache_.summaries.cols,
              cache.summaries.row(n));
    cache.valid[n] = cache_.valid[src];
    dirty[n] = dirty_[src];
  }
  cache_ = std::move(cache);
  dirty_ = std::move(dirty);
  cursor_ = ((cursor_ - shift) % cfg_.history_len + cfg_.history_len) % cfg_.history_len;
}

std::vector<float> Engine::summary_residuals() const {
  const Matrix fresh = encode_windows(slots_, cfg_.num_windows, cfg_, *weights_);
  std::vector<float> out(static_cast<std::size_t>(cfg_.num_windows), 0.0f);
  for (int n = 0; n < cfg_.num_windows; ++n) {
    float worst = 0.0f;
    for (int j = 0; j < cache_.summaries.cols; ++j)
      worst = std::max(worst, std::abs(fresh.at(n, j) - cache_.summaries.at(n, j)));
    out[n] = worst;
  }
  return out;
}

void Engine::dump_state(std::ostream& out) const {
  WeightStore s;
  s.put("state.slots", slots_);
  s.put("state.trend", pad_queue(trend_, static_cast<int>(trend_.size()), cfg_.trend_dim));
  s.put("state.trend_raw",
        pad_queue(trend_raw_, static_cast<int>(trend_raw_.size()), cfg_.input_dim));
  s.put("state.summaries", cache_.summaries);
  Matrix flags(1, cfg_.num_windows);
  for (int n = 0; n < cfg_.num_windows; ++n)
    flags.at(0, n) = static_cast<float>(cache_.valid[n] | (dirty_[n] << 1));
  s.put("state.flags", std::move(flags));
  Matrix scalars(1, 4);
  scalars.at(0, 0) = static_cast<float>(cursor_);
  scalars.at(0, 1) = static_cast<float>(counters_.window_encodes);
  scalars.at(0, 2) = static_cast<float>(counters_.bank_attentions);
  scalars.at(0, 3) = static_cast<float>(counters_.steps);
  s.put("state.scalars", std::move(scalars));
  save_weights(s, out);
}

void Engine::restore_state(std::istream& in) {
  WeightStore s = load_weights(in);
  const Matrix& slots = s.get("state.slots");
  if (!slots.same_shape(slots_)) throw WeightFormatError("state.slots: shape mismatch");
  const Matrix& summaries = s.get("state.summaries");
  if (!summaries.same_shape(cache_.summaries))
    throw WeightFormatError("state.summaries: shape mismatch");
  const Matrix& trend = s.get("state.trend");
  const Matrix& raw = s.get("state.trend_raw");
  if (trend.rows != raw.rows || trend.rows > cfg_.trend_len)
    throw WeightFormatError("state.trend: row count inconsistent with state.trend_raw");
  if (trend.rows > 0 && (trend.cols != cfg_.trend_dim || raw.cols != cfg_.input_dim))
    throw WeightFormatError("state.trend: frame width mismatch");
  const Matrix& flags = s.get("state.flags");
  const Matrix& scalars = s.get("state.scalars");
  if (flags.cols != cfg_.num_windows || scalars.cols != 4)
    throw WeightFormatError("state.flags/state.scalars: shape mismatch");

  slots_ = slots;
  cache_.summaries = summaries;
  for (int n = 0; n < cfg_.num_windows; ++n) {
    const int f = static_cast<int>(flags.at(0, n));
    cache_.valid[n] = f & 1;
    dirty_[n] = (f >> 1) & 1;
  }
  trend_.clear();
  trend_raw_.clear();
  for (int i = 0; i < trend.rows; ++i) {
    trend_.emplace_back(trend.row(i), trend.row(i) + trend.cols);
    trend_raw_.emplace_back(raw.row(i), raw.row(i) + raw.cols);
  }
  cursor_ = static_cast<int>(scalars.at(0, 0));
  counters_.window_encodes = static_cast<long long>(scalars.at(0, 1));
  counters_.bank_attentions = static_cast<long long>(scalars.at(0, 2));
  counters_.steps = static_cast<long long>(scalars.at(0, 3));
}

void Engine::dump_state(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WeightFormatError("cannot open " + path + " for writing");
  dump_state(out);
}

void Engine::restore_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFormatError("cannot open " + path);
  restore_state(in);
}

SlidingEngine::SlidingEngine(const ModelConfig& cfg, const WeightStore& w)
    : cfg_(cfg),
      weights_(&w),
      history_(cfg.history_len, cfg.history_dim),
      positions_(sinusoidal_positions(cfg.trend_len, cfg.trend_dim)) {
  const auto problems = validate(cfg);
  if (!problems.empty())
    throw std::invalid_argument("SlidingEngine: invalid config: " + problems.front());
  check_store(cfg, w);
}

StepResult SlidingEngine::step(std::span<const float> x) {
  append_frame(trend_, trend_raw_, x, *weights_);
  if (static_cast<int>(trend_.size()) > cfg_.trend_len) {
    const std::vector<float> evicted = std::move(trend_raw_.front());
    trend_raw_.pop_front();
    trend_.pop_front();
    const auto e = project_history(evicted, *weights_);
    // Shift the whole queue: oldest frame drops out of row 0.
    std::copy(history_.row(1), history_.row(1) + (history_.rows - 1) * history_.cols,
              history_.row(0));
    std::copy(e.begin(), e.end(), history_.row(history_.rows - 1));
  }

  CompressedBank bank(cfg_.num_windows, cfg_.bank_dim());
  bank.summaries = encode_windows(history_, cfg_.num_windows, cfg_, *weights_);
  std::fill(bank.valid.begin(), bank.valid.end(), 1);
  counters_.window_encodes += cfg_.num_windows;

  Matrix trend = pad_queue(trend_, cfg_.trend_len, cfg_.trend_dim);
  add_inplace(trend, positions_);
  DownstreamResult down = run_downstream(bank, trend, cfg_, *weights_);
  ++counters_.bank_attentions;
  ++counters_.steps;

  StepResult r;
  r.coarse = last_row(down.coarse);
  r.refined = last_row(down.refined);
  r.counters = counters_;
  return r;
}

}  // namespace cwct
