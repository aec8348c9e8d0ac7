#pragma once

#include <cstdint>
#include <iosfwd>

#include "cwct/config.hpp"
#include "cwct/macs.hpp"
#include "cwct/weights.hpp"

namespace cwct {

struct BenchModeReport {
  double steps_per_sec = 0.0;
  double ms_per_step = 0.0;
  double window_encodes_per_step = 0.0;
  MacBreakdown macs_per_step;
};

struct BenchReport {
  BenchModeReport circular;
  BenchModeReport sliding;
  int steps = 0;
  // Circular vs sliding predictions compared at every step where the ring
  // cursor lands on a window boundary (the only steps where both modes see
  // the same window partition, up to bank row order).
  int boundary_checks = 0;
  float boundary_max_divergence = 0.0f;
};

// Drive both engines over the same synthetic random stream and time them.
// Throws if boundary-step predictions disagree beyond `tolerance`.
BenchReport run_bench(const ModelConfig& cfg, const WeightStore& w, int steps, std::uint64_t seed,
                      float tolerance = 1e-5f);

void print_report(const BenchReport& r, std::ostream& out);

}  // namespace cwct
