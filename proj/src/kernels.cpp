#include "cwct/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace cwct::kernels {

std::vector<const Ops*> available() {
  std::vector<const Ops*> out{&scalar_ops()};
  if (const Ops* o = avx2_ops()) out.push_back(o);
  if (const Ops* o = avx512_ops()) out.push_back(o);
  if (const Ops* o = neon_ops()) out.push_back(o);
  return out;
}

namespace {

const Ops& select() {
  const char* want = std::getenv("CWCT_KERNELS");
  if (want && std::strlen(want) > 0 && std::strcmp(want, "auto") != 0) {
    for (const Ops* o : available())
      if (std::strcmp(o->name, want) == 0) return *o;
    throw std::runtime_error(std::string("CWCT_KERNELS=") + want +
                             " is not supported on this machine");
  }
  if (const Ops* o = avx512_ops()) return *o;
  if (const Ops* o = avx2_ops()) return *o;
  if (const Ops* o = neon_ops()) return *o;
  return scalar_ops();
}

}  // namespace

const Ops& active() {
  static const Ops& ops = select();
  return ops;
}

std::size_t packed_floats(const Ops& o, int k, int n) {
  if (o.panel <= 0) return 0;
  const std::size_t np = (n + o.panel - 1) / o.panel;
  return np * static_cast<std::size_t>(k) * o.panel;
}

}  // namespace cwct::kernels
