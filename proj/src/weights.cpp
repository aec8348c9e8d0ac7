#include "cwct/weights.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <random>

#include <sys/mman.h>

namespace cwct {

PackedB::PackedB(const Matrix& w) {
  const kernels::Ops& ops = kernels::active();
  if (ops.panel <= 0) return;
  k_ = w.rows;
  n_ = w.cols;
  ops_ = &ops;
  const std::size_t bytes = kernels::packed_floats(ops, k_, n_) * sizeof(float);
  constexpr std::size_t kAlign = 2u << 20;
  void* p = nullptr;
  if (posix_memalign(&p, kAlign, (bytes + kAlign - 1) / kAlign * kAlign) != 0)
    throw std::bad_alloc();
#ifdef MADV_HUGEPAGE
  madvise(p, (bytes + kAlign - 1) / kAlign * kAlign, MADV_HUGEPAGE);
#endif
  buf_ = std::shared_ptr<float[]>(static_cast<float*>(p), [](float* q) { std::free(q); });
  ops.pack_b(w.data.data(), buf_.get(), k_, n_);
}

void PackedB::gemm(const float* a, float* c, int m) const {
  ops_->gemm_packed(a, buf_.get(), c, m, k_, n_);
}

void WeightStore::put(const std::string& name, Matrix m) {
  if (tensors_.count(name)) throw std::invalid_argument("WeightStore: duplicate tensor " + name);
  order_.push_back(name);
  tensors_.emplace(name, std::move(m));
}

const Matrix& WeightStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::invalid_argument("WeightStore: missing tensor " + name);
  return it->second;
}

const PackedB& WeightStore::packed(const std::string& name) const {
  std::lock_guard<std::mutex> lock(*mu_);
  auto it = packed_.find(name);
  if (it == packed_.end()) it = packed_.emplace(name, PackedB(get(name))).first;
  return it->second;
}

namespace {

struct ManifestBuilder {
  const ModelConfig& cfg;
  std::vector<TensorSpec> specs;

  void add(const std::string& name, int rows, int cols, InitKind k = InitKind::kXavier) {
    specs.push_back({name, rows, cols, k});
  }

  // Head widths as even as possible; unequal only when heads does not
  // divide the width (the probability-space cascade).
  static std::vector<int> head_widths(int c, int heads) {
    std::vector<int> w(heads, c / heads);
    for (int i = 0; i < c % heads; ++i) ++w[i];
    return w;
  }

  void msa_block(const std::string& prefix, int c, int heads, bool cross = false) {
    add(prefix + ".ln1.gain", 1, c, InitKind::kOnes);
    add(prefix + ".ln1.bias", 1, c, InitKind::kZeros);
    if (cross) {
      add(prefix + ".lnkv.gain", 1, c, InitKind::kOnes);
      add(prefix + ".lnkv.bias", 1, c, InitKind::kZeros);
    }
    const auto widths = head_widths(c, heads);
    for (int i = 0; i < heads; ++i) {
      add(prefix + ".head" + std::to_string(i) + ".wq", c, widths[i]);
      add(prefix + ".head" + std::to_string(i) + ".wk", c, widths[i]);
      add(prefix + ".head" + std::to_string(i) + ".wv", c, widths[i]);
    }
    add(prefix + ".out.w", c, c);
    add(prefix + ".out.b", 1, c, InitKind::kZeros);
    add(prefix + ".ln2.gain", 1, c, InitKind::kOnes);
    add(prefix + ".ln2.bias", 1, c, InitKind::kZeros);
    const int e = cfg.ffn_expansion * c;
    add(prefix + ".ffn.w1", c, e);
    add(prefix + ".ffn.b1", 1, e, InitKind::kZeros);
    add(prefix + ".ffn.w2", e, c);
    add(prefix + ".ffn.b2", 1, c, InitKind::kZeros);
  }

  void mtsm_reduce_block(const std::string& prefix, int n, int c, int heads, int r) {
    const int hw = 2 * c / heads;
    for (int i = 0; i < heads; ++i) add(prefix + ".head" + std::to_string(i) + ".wh", c, hw);
    add(prefix + ".bottleneck.w", hw, c / 4);
    add(prefix + ".reduce.w", n / r, c / 4);
    add(prefix + ".out.w", 2 * c, 2 * c);
    add(prefix + ".out.b", 1, 2 * c, InitKind::kZeros);
  }

  void mtsm_expand_block(const std::string& prefix, int n, int c, int heads, int k) {
    const int hw = c / heads;
    for (int i = 0; i < heads; ++i) add(prefix + ".head" + std::to_string(i) + ".wh", c, hw);
    add(prefix + ".bottleneck.w", hw, c / 4);
    add(prefix + ".expand.w", n * k, c / 4);
    add(prefix + ".out.w", c, c);
    add(prefix + ".out.b", 1, c, InitKind::kZeros);
  }
};

}  // namespace

std::vector<TensorSpec> weight_manifest(const ModelConfig& cfg) {
  ManifestBuilder b{cfg, {}};
  const int bank = cfg.bank_dim();

  b.add("cwhe.proj_hist", cfg.history_dim, cfg.input_dim);
  b.add("cwe.proj_trend", cfg.trend_dim, cfg.input_dim);

  for (int s = 0; s < cfg.num_stages; ++s) {
    const std::string stage = "cwhe.stage" + std::to_string(s);
    b.msa_block(stage + ".msa", cfg.stage_channels(s), cfg.msa_heads);
    b.mtsm_reduce_block(stage + ".mtsm", cfg.stage_tokens(s), cfg.stage_channels(s),
                        cfg.mtsm_heads, cfg.stage_reduction[s]);
  }
  for (int l = 0; l < cfg.global_sa_layers; ++l)
    b.msa_block("cwhe.global.layer" + std::to_string(l), bank, cfg.msa_heads);

  for (int l = 0; l < cfg.trend_sa_layers; ++l)
    b.msa_block("cwe.causal.layer" + std::to_string(l), cfg.trend_dim, cfg.msa_heads);
  for (int m = 0; m < cfg.trend_ca_modules; ++m) {
    const std::string mod = "cwe.cross" + std::to_string(m);
    b.msa_block(mod + ".self", cfg.trend_dim, cfg.msa_heads);
    b.msa_block(mod + ".cross", cfg.trend_dim, cfg.msa_heads, /*cross=*/true);
  }

  b.add("classifier.w", cfg.trend_dim, cfg.num_actions);
  b.add("classifier.b", 1, cfg.num_actions, InitKind::kZeros);

  for (int l = 0; l < cfg.cascade_sa_layers; ++l)
    b.msa_block("cascade.layer" + std::to_string(l), cfg.num_actions, cfg.cascade_heads());

  const auto dec_tokens = cfg.decoder_tokens();
  for (std::size_t s = 0; s < cfg.decoder_swin_layers.size(); ++s) {
    const std::string stage = "swhd.stage" + std::to_string(s);
    for (int l = 0; l < cfg.decoder_swin_layers[s]; ++l)
      b.msa_block(stage + ".swin" + std::to_string(l), bank, cfg.msa_heads);
    if (s < cfg.decoder_expansion.size()) {
      b.mtsm_expand_block(stage + ".expand", dec_tokens[s], bank, cfg.mtsm_heads,
                          cfg.decoder_expansion[s]);
      b.msa_block(stage + ".align", bank, cfg.msa_heads);
    }
  }
  return b.specs;
}

WeightStore init_weights(const ModelConfig& cfg, std::uint64_t seed) {
  const auto violations = validate(cfg);
  if (!violations.empty())
    throw std::invalid_argument("init_weights: invalid config: " + violations.front());

  std::mt19937_64 rng(seed);
  auto uniform01 = [&rng]() {
    // 24 high bits -> float in [0, 1); avoids the distribution's
    // implementation-defined stream.
    return static_cast<float>(rng() >> 40) * (1.0f / 16777216.0f);
  };

  WeightStore store;
  for (const TensorSpec& spec : weight_manifest(cfg)) {
    Matrix m(spec.rows, spec.cols);
    switch (spec.init) {
      case InitKind::kZeros:
        break;
      case InitKind::kOnes:
        std::fill(m.data.begin(), m.data.end(), 1.0f);
        break;
      case InitKind::kXavier: {
        const float bound = std::sqrt(6.0f / static_cast<float>(spec.rows + spec.cols));
        for (float& x : m.data) x = (2.0f * uniform01() - 1.0f) * bound;
        break;
      }
    }
    store.put(spec.name, std::move(m));
  }
  return store;
}

void check_store(const ModelConfig& cfg, const WeightStore& store) {
  const auto manifest = weight_manifest(cfg);
  for (const TensorSpec& spec : manifest) {
    if (!store.contains(spec.name))
      throw std::invalid_argument("weight store: missing tensor " + spec.name);
    const Matrix& m = store.get(spec.name);
    if (m.rows != spec.rows || m.cols != spec.cols)
      throw std::invalid_argument("weight store: tensor " + spec.name + " has shape " +
                                  std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                  ", expected " + std::to_string(spec.rows) + "x" +
                                  std::to_string(spec.cols));
  }
  if (store.size() != manifest.size())
    throw std::invalid_argument("weight store: unexpected extra tensors present");
}

namespace {

constexpr char kMagic[4] = {'C', 'W', 'C', 'T'};
constexpr std::uint32_t kVersion = 1;
// Guards against corrupt headers claiming absurd payloads.
constexpr std::uint64_t kMaxElements = 1ull << 33;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
bool read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return static_cast<bool>(in);
}

}  // namespace

void save_weights(const WeightStore& store, std::ostream& out) {
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(store.size()));
  for (const std::string& name : store.names()) {
    const Matrix& m = store.get(name);
    write_pod(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<std::uint8_t>(2));
    write_pod(out, static_cast<std::uint32_t>(m.rows));
    write_pod(out, static_cast<std::uint32_t>(m.cols));
    out.write(reinterpret_cast<const char*>(m.data.data()),
              static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  }
  if (!out) throw WeightFormatError("weight file: write failed");
}

void save_weights(const WeightStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WeightFormatError("weight file: cannot open " + path + " for writing");
  save_weights(store, out);
}

WeightStore load_weights(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw WeightFormatError("weight file: bad magic at offset 0");
  std::uint32_t version = 0, count = 0;
  if (!read_pod(in, version) || version != kVersion)
    throw WeightFormatError("weight file: unsupported version at offset 4");
  if (!read_pod(in, count)) throw WeightFormatError("weight file: truncated header at offset 8");

  WeightStore store;
  std::uint64_t offset = 12;
  for (std::uint32_t t = 0; t < count; ++t) {
    std::uint16_t name_len = 0;
    if (!read_pod(in, name_len))
      throw WeightFormatError("weight file: truncated name length at offset " +
                              std::to_string(offset) + " (tensor " + std::to_string(t) + ")");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in)
      throw WeightFormatError("weight file: truncated name at offset " +
                              std::to_string(offset + 2) + " (tensor " + std::to_string(t) + ")");
    offset += 2 + name_len;

    std::uint8_t rank = 0;
    if (!read_pod(in, rank))
      throw WeightFormatError("weight file: truncated rank for tensor '" + name + "' at offset " +
                              std::to_string(offset));
    if (rank < 1 || rank > 2)
      throw WeightFormatError("weight file: unsupported rank " + std::to_string(rank) +
                              " for tensor '" + name + "' at offset " + std::to_string(offset));
    offset += 1;

    std::uint64_t elements = 1;
    std::uint32_t dims[2] = {1, 1};
    for (int d = 0; d < rank; ++d) {
      if (!read_pod(in, dims[d]))
        throw WeightFormatError("weight file: truncated dims for tensor '" + name +
                                "' at offset " + std::to_string(offset));
      elements *= dims[d];
      offset += 4;
    }
    if (elements > kMaxElements)
      throw WeightFormatError("weight file: shape overflow for tensor '" + name + "' at offset " +
                              std::to_string(offset));

    const int rows = rank == 2 ? static_cast<int>(dims[0]) : 1;
    const int cols = rank == 2 ? static_cast<int>(dims[1]) : static_cast<int>(dims[0]);
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(elements * sizeof(float)));
    if (!in)
      throw WeightFormatError("weight file: truncated payload for tensor '" + name +
                              "' at offset " + std::to_string(offset));
    offset += elements * sizeof(float);
    store.put(name, std::move(m));
  }
  return store;
}

WeightStore load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFormatError("weight file: cannot open " + path);
  return load_weights(in);
}

Matrix linear(const Matrix& x, const WeightStore& w, const std::string& weight_name,
              const std::string& bias_name) {
  const Matrix& W = w.get(weight_name);
  if (x.cols != W.rows)
    throw std::invalid_argument("linear: " + weight_name + " expects input width " +
                                std::to_string(W.rows) + ", got " + std::to_string(x.cols));
  Matrix out(x.rows, W.cols);
  const PackedB& p = w.packed(weight_name);
  if (p.valid()) {
    p.gemm(x.data.data(), out.data.data(), x.rows);
  } else {
    kernels::active().gemm(x.data.data(), W.data.data(), out.data.data(), x.rows, x.cols, W.cols);
  }
  if (!bias_name.empty()) {
    const Matrix& bias = w.get(bias_name);
    if (bias.cols != out.cols) throw std::invalid_argument("linear: bias width mismatch");
    for (int i = 0; i < out.rows; ++i)
      kernels::active().add(out.row(i), bias.data.data(), static_cast<std::size_t>(out.cols));
  }
  return out;
}

}  // namespace cwct
