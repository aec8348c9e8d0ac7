#include "cwct/macs.hpp"

namespace cwct {

namespace {

using ll = long long;

// One pre-LN residual attention layer: QKV and output projections,
// score/value products, two FFN matmuls. Head widths sum to c, so the
// per-head split drops out of the count.
ll attn_layer(ll nq, ll nkv, ll c, ll ffn_expansion) {
  const ll qkv = nq * c * c + 2 * nkv * c * c;
  const ll scores = 2 * nq * nkv * c;  // Q K^T and A V across all heads
  const ll out = nq * c * c;
  const ll ffn = 2 * nq * c * (c * ffn_expansion);
  return qkv + scores + out + ffn;
}

}  // namespace

long long encode_window_macs(const ModelConfig& cfg) {
  ll total = 0;
  ll n = cfg.window_size();
  for (int s = 0; s < cfg.num_stages; ++s) {
    const ll c = cfg.stage_channels(s);
    const ll r = cfg.stage_reduction[s];
    total += attn_layer(n, n, c, cfg.ffn_expansion);
    // Slimming: head projections, shared bottleneck, per-head mixing
    // scores and token mixes, then the 2c x 2c output projection.
    total += n * c * (2 * c);                                  // T per head, summed
    total += n * (2 * c) * (c / 4);                            // bottleneck
    total += static_cast<ll>(cfg.mtsm_heads) * (n / r) * n * (c / 4);  // scores
    total += (n / r) * n * (2 * c);                            // mixes, summed over heads
    total += (n / r) * (2 * c) * (2 * c);                      // output projection
    n /= r;
  }
  return total;
}

namespace {

MacBreakdown shared_step_macs(const ModelConfig& cfg) {
  MacBreakdown m;
  const ll nw = cfg.num_windows;
  const ll bank = cfg.bank_dim();
  const ll ms = cfg.trend_len;
  const ll ds = cfg.trend_dim;
  const ll na = cfg.num_actions;

  m.bank_attention = static_cast<ll>(cfg.global_sa_layers) * attn_layer(nw, nw, bank, cfg.ffn_expansion);

  ll t = 0;
  t += static_cast<ll>(cfg.input_dim) * ds;              // trend projection of x_t
  t += static_cast<ll>(cfg.input_dim) * cfg.history_dim; // history projection of the evicted frame
  t += static_cast<ll>(cfg.trend_sa_layers) * attn_layer(ms, ms, ds, cfg.ffn_expansion);
  t += static_cast<ll>(cfg.trend_ca_modules) *
       (attn_layer(ms, ms, ds, cfg.ffn_expansion) + attn_layer(ms, nw, ds, cfg.ffn_expansion));
  t += ms * ds * na;  // classifier
  t += static_cast<ll>(cfg.cascade_stages) * cfg.cascade_sa_layers *
       attn_layer(ms, ms, na, cfg.ffn_expansion);
  m.trend_path = t;
  return m;
}

}  // namespace

MacBreakdown circular_step_macs(const ModelConfig& cfg) {
  MacBreakdown m = shared_step_macs(cfg);
  m.window_encoder = encode_window_macs(cfg);
  return m;
}

MacBreakdown sliding_step_macs(const ModelConfig& cfg) {
  MacBreakdown m = shared_step_macs(cfg);
  m.window_encoder = static_cast<long long>(cfg.num_windows) * encode_window_macs(cfg);
  return m;
}

}  // namespace cwct
