#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cwct/config.hpp"
#include "cwct/kernels.hpp"
#include "cwct/matrix.hpp"

namespace cwct {

// Weight matrix rearranged into the active kernel's panel layout. Built
// once per tensor so repeated x*W calls stream contiguous panels.
class PackedB {
 public:
  PackedB() = default;
  explicit PackedB(const Matrix& w);

  bool valid() const { return ops_ != nullptr && buf_ != nullptr; }
  // c (m x n) = a (m x k) * W
  void gemm(const float* a, float* c, int m) const;
  int k() const { return k_; }
  int n() const { return n_; }

 private:
  int k_ = 0;
  int n_ = 0;
  const kernels::Ops* ops_ = nullptr;
  // 2 MiB-aligned so the buffers can be backed by huge pages; the packed
  // weights dominate the memory streamed per inference step and page-walk
  // stalls show up directly in the GEMM throughput.
  std::shared_ptr<float[]> buf_;
};

// Named dense parameter tensors. Immutable once built; the packed-form
// cache is the only mutable state and is guarded.
class WeightStore {
 public:
  WeightStore() = default;
  WeightStore(WeightStore&&) = default;
  WeightStore& operator=(WeightStore&&) = default;

  void put(const std::string& name, Matrix m);
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Matrix& get(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }

  const PackedB& packed(const std::string& name) const;

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Matrix> tensors_;
  mutable std::unordered_map<std::string, PackedB> packed_;
  mutable std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

enum class InitKind { kXavier, kZeros, kOnes };

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  InitKind init = InitKind::kXavier;
};

// Full tensor inventory implied by a config, in serialization order.
std::vector<TensorSpec> weight_manifest(const ModelConfig& cfg);

// Xavier-uniform matrices, zero biases, unit layer-norm gains, all drawn
// from one seeded deterministic generator. Same (config, seed) gives a
// byte-identical store.
WeightStore init_weights(const ModelConfig& cfg, std::uint64_t seed);

// Throws when the store's inventory does not match the config.
void check_store(const ModelConfig& cfg, const WeightStore& store);

// Raised by the container reader/writer; carries the offending tensor.
struct WeightFormatError : std::runtime_error {
  explicit WeightFormatError(const std::string& what) : std::runtime_error(what) {}
};

void save_weights(const WeightStore& store, std::ostream& out);
void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(std::istream& in);
WeightStore load_weights(const std::string& path);

// x (m x in) * W (+ bias row when bias_name is non-empty). Uses the packed
// path when the active kernel supports it.
Matrix linear(const Matrix& x, const WeightStore& w, const std::string& weight_name,
              const std::string& bias_name);

}  // namespace cwct
