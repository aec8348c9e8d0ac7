#include "cwct/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cwct {

int ModelConfig::stage_tokens(int s) const {
  int n = window_size();
  for (int i = 0; i < s && i < static_cast<int>(stage_reduction.size()); ++i)
    n /= stage_reduction[i];
  return n;
}

std::vector<int> ModelConfig::decoder_tokens() const {
  std::vector<int> out;
  int n = num_windows;
  for (std::size_t s = 0; s < decoder_swin_layers.size(); ++s) {
    out.push_back(n);
    if (s < decoder_expansion.size()) n *= decoder_expansion[s];
  }
  return out;
}

ModelConfig default_config() {
  ModelConfig cfg;
  cfg.input_dim = 2048;
  return cfg;
}

std::vector<std::string> validate(const ModelConfig& cfg) {
  std::vector<std::string> v;
  auto bad = [&](const std::string& s) { v.push_back(s); };

  if (cfg.input_dim < 1) bad("input_dim must be >= 1 (no default exists)");
  if (cfg.history_len < 1) bad("history_len must be >= 1");
  if (cfg.trend_len < 1) bad("trend_len must be >= 1");
  if (cfg.num_windows < 1) bad("num_windows must be >= 1");
  if (cfg.num_windows >= 1 && cfg.history_len % cfg.num_windows != 0)
    bad("m_L mod N_w: history_len must be divisible by num_windows");
  if (cfg.num_actions < 2) bad("num_actions must be >= 2 (background plus one action)");
  if (cfg.lambda1 < 0.0f || cfg.lambda2 < 0.0f || cfg.lambda3 < 0.0f)
    bad("loss weights must be nonnegative");
  if (cfg.ffn_expansion < 1) bad("ffn_expansion must be >= 1");
  if (cfg.msa_heads < 1) bad("msa_heads must be >= 1");
  if (cfg.mtsm_heads < 1) bad("mtsm_heads must be >= 1");
  if (cfg.trend_sa_layers < 1) bad("trend_sa_layers must be >= 1");
  if (cfg.cascade_stages < 1) bad("cascade_stages must be >= 1");
  if (cfg.num_stages != static_cast<int>(cfg.stage_reduction.size()))
    bad("stage_reduction must list one rate per stage");

  const int w = cfg.window_size();
  if (cfg.num_windows >= 1) {
    long long prod = 1;
    for (int r : cfg.stage_reduction) {
      if (r < 1) bad("stage reduction rates must be >= 1");
      prod *= std::max(r, 1);
    }
    if (prod > 0 && (w % prod != 0 || w / prod < 1))
      bad("window exhausted before pooling: product of stage_reduction must divide window size");
  }
  if (cfg.history_dim >= 1 && cfg.msa_heads >= 1) {
    for (int s = 0; s < cfg.num_stages; ++s) {
      const int c = cfg.stage_channels(s);
      if (c % cfg.msa_heads != 0) bad("stage channel width not divisible by msa_heads");
      if ((2 * c) % cfg.mtsm_heads != 0) bad("stage output width not divisible by mtsm_heads");
      if (c % 4 != 0) bad("stage channel width must be divisible by 4 (slimming bottleneck)");
    }
  }
  if (cfg.bank_dim() != cfg.trend_dim)
    bad("bank width d_L*2^M must equal trend_dim so the trend can cross-attend the bank");
  if (cfg.trend_dim % 2 != 0) bad("trend_dim must be even for sinusoidal positions");
  if (cfg.trend_dim % cfg.msa_heads != 0) bad("trend_dim not divisible by msa_heads");

  if (cfg.decoder_swin_layers.size() != cfg.decoder_expansion.size() + 1)
    bad("decoder_swin_layers must have exactly one more entry than decoder_expansion");
  long long expand = 1;
  for (int k : cfg.decoder_expansion) {
    if (k < 1) bad("decoder expansion rates must be >= 1");
    expand *= std::max(k, 1);
  }
  if (cfg.num_windows >= 1 && expand * cfg.num_windows != cfg.history_len)
    bad("decoder expansion product times num_windows must equal history_len");
  if (cfg.decoder_window_size < 1) {
    bad("decoder_window_size must be >= 1");
  } else {
    for (int n : cfg.decoder_tokens())
      if (n % cfg.decoder_window_size != 0)
        bad("decoder_window_size must divide every decoder-stage token count");
  }
  if (cfg.bank_dim() % cfg.mtsm_heads != 0) bad("bank width not divisible by mtsm_heads");
  if (cfg.bank_dim() % 4 != 0) bad("bank width must be divisible by 4 (slimming bottleneck)");

  return v;
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ModelConfig parse_config(std::istream& in) {
  ModelConfig cfg = default_config();
  cfg.input_dim = 0;  // mandatory in files

  std::map<std::string, std::function<void(const std::string&)>> setters;
  auto int_key = [&](const char* k, int& field) {
    setters[k] = [&field](const std::string& v) { field = std::stoi(v); };
  };
  auto list_key = [&](const char* k, std::vector<int>& field) {
    setters[k] = [&field](const std::string& v) { field = parse_int_list(v); };
  };
  auto float_key = [&](const char* k, float& field) {
    setters[k] = [&field](const std::string& v) { field = std::stof(v); };
  };
  int_key("input_dim", cfg.input_dim);
  int_key("history_len", cfg.history_len);
  int_key("trend_len", cfg.trend_len);
  int_key("num_windows", cfg.num_windows);
  int_key("history_dim", cfg.history_dim);
  int_key("trend_dim", cfg.trend_dim);
  int_key("num_stages", cfg.num_stages);
  list_key("stage_reduction", cfg.stage_reduction);
  int_key("msa_heads", cfg.msa_heads);
  int_key("mtsm_heads", cfg.mtsm_heads);
  int_key("global_sa_layers", cfg.global_sa_layers);
  int_key("trend_sa_layers", cfg.trend_sa_layers);
  int_key("trend_ca_modules", cfg.trend_ca_modules);
  int_key("cascade_sa_layers", cfg.cascade_sa_layers);
  int_key("cascade_stages", cfg.cascade_stages);
  list_key("decoder_swin_layers", cfg.decoder_swin_layers);
  list_key("decoder_expansion", cfg.decoder_expansion);
  int_key("decoder_window_size", cfg.decoder_window_size);
  int_key("num_actions", cfg.num_actions);
  float_key("lambda1", cfg.lambda1);
  float_key("lambda2", cfg.lambda2);
  float_key("lambda3", cfg.lambda3);
  int_key("ffn_expansion", cfg.ffn_expansion);
  setters["seed"] = [&cfg](const std::string& v) { cfg.seed = std::stoull(v); };
  setters["cascade_softmax_renorm"] = [&cfg](const std::string& v) {
    cfg.cascade_softmax_renorm = (v == "1" || v == "true");
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown key '" + key +
                               "'");
    try {
      it->second(val);
    } catch (const std::exception&) {
      throw std::runtime_error("config line " + std::to_string(lineno) + ": bad value for '" +
                               key + "'");
    }
  }
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

void write_config(const ModelConfig& cfg, std::ostream& out) {
  out << "input_dim = " << cfg.input_dim << "\n"
      << "history_len = " << cfg.history_len << "\n"
      << "trend_len = " << cfg.trend_len << "\n"
      << "num_windows = " << cfg.num_windows << "\n"
      << "history_dim = " << cfg.history_dim << "\n"
      << "trend_dim = " << cfg.trend_dim << "\n"
      << "num_stages = " << cfg.num_stages << "\n"
      << "stage_reduction = " << join(cfg.stage_reduction) << "\n"
      << "msa_heads = " << cfg.msa_heads << "\n"
      << "mtsm_heads = " << cfg.mtsm_heads << "\n"
      << "global_sa_layers = " << cfg.global_sa_layers << "\n"
      << "trend_sa_layers = " << cfg.trend_sa_layers << "\n"
      << "trend_ca_modules = " << cfg.trend_ca_modules << "\n"
      << "cascade_sa_layers = " << cfg.cascade_sa_layers << "\n"
      << "cascade_stages = " << cfg.cascade_stages << "\n"
      << "decoder_swin_layers = " << join(cfg.decoder_swin_layers) << "\n"
      << "decoder_expansion = " << join(cfg.decoder_expansion) << "\n"
      << "decoder_window_size = " << cfg.decoder_window_size << "\n"
      << "num_actions = " << cfg.num_actions << "\n"
      << "lambda1 = " << cfg.lambda1 << "\n"
      << "lambda2 = " << cfg.lambda2 << "\n"
      << "lambda3 = " << cfg.lambda3 << "\n"
      << "ffn_expansion = " << cfg.ffn_expansion << "\n"
      << "seed = " << cfg.seed << "\n"
      << "cascade_softmax_renorm = " << (cfg.cascade_softmax_renorm ? 1 : 0) << "\n";
}

}  // namespace cwct
