#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cwct {

// Every hyperparameter of the model. Field comments give the symbol used
// throughout the code and docs.
struct ModelConfig {
  int input_dim = 0;  // d, width of the pre-extracted chunk features.
                      // Depends on the upstream extractor; must be set
                      // explicitly in config files.

  int history_len = 512;  // m_L
  int trend_len = 32;     // m_S
  int num_windows = 16;   // N_w
  int history_dim = 256;  // d_L
  int trend_dim = 1024;   // d_S

  int num_stages = 2;                      // M
  std::vector<int> stage_reduction{4, 4};  // r per encoder stage
  int msa_heads = 4;                       // N_h
  int mtsm_heads = 8;                      // N_h'

  int global_sa_layers = 3;
  int trend_sa_layers = 2;  // L_S
  int trend_ca_modules = 2;
  int cascade_sa_layers = 2;  // L_C
  int cascade_stages = 1;

  std::vector<int> decoder_swin_layers{4, 8, 4, 2};  // L per decoder stage
  std::vector<int> decoder_expansion{2, 4, 4};       // r' per expanding stage
  int decoder_window_size = 8;

  int num_actions = 21;  // N_a, background at index 0

  float lambda1 = 0.2f;
  float lambda2 = 0.7f;
  float lambda3 = 0.4f;

  int ffn_expansion = 4;
  std::uint64_t seed = 0;

  // Renormalization after the cascade shortcut: false = clamp + L1 (the
  // default), true = softmax (experimental alternative).
  bool cascade_softmax_renorm = false;

  int window_size() const { return num_windows > 0 ? history_len / num_windows : 0; }  // w
  int bank_dim() const { return history_dim << num_stages; }  // d_L * 2^M

  // Channel width entering encoder stage s (s in [0, M)).
  int stage_channels(int s) const { return history_dim << s; }
  // Tokens entering encoder stage s.
  int stage_tokens(int s) const;
  // Heads used inside the cascade (probability-space attention).
  int cascade_heads() const { return num_actions >= 4 ? 2 : 1; }
  // Token counts entering each decoder stage (size decoder_swin_layers.size()).
  std::vector<int> decoder_tokens() const;
};

// Paper defaults. input_dim has no canonical value (it is fixed by the
// upstream feature extractor); 2048 here is a representative stand-in.
ModelConfig default_config();

// Empty result means the config is valid.
std::vector<std::string> validate(const ModelConfig& cfg);

// Line-based "key = value" text; '#' starts a comment; unknown keys are
// rejected. List values are comma-separated. input_dim is mandatory.
ModelConfig parse_config(std::istream& in);
ModelConfig load_config(const std::string& path);
void write_config(const ModelConfig& cfg, std::ostream& out);

}  // namespace cwct
