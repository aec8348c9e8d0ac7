#include "cwct/bench.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "cwct/engine.hpp"

namespace cwct {

BenchReport run_bench(const ModelConfig& cfg, const WeightStore& w, int steps, std::uint64_t seed,
                      float tolerance) {
  if (steps < 1) throw std::invalid_argument("run_bench: steps must be positive");
  Engine circular(cfg, w);
  SlidingEngine sliding(cfg, w);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> x(static_cast<std::size_t>(cfg.input_dim));

  BenchReport report;
  report.steps = steps;
  using clock = std::chrono::steady_clock;
  double circular_sec = 0.0;
  double sliding_sec = 0.0;

  for (int t = 0; t < steps; ++t) {
    for (float& v : x) v = dist(rng);

    auto t0 = clock::now();
    StepResult c = circular.step(x);
    auto t1 = clock::now();
    StepResult s = sliding.step(x);
    auto t2 = clock::now();
    circular_sec += std::chrono::duration<double>(t1 - t0).count();
    sliding_sec += std::chrono::duration<double>(t2 - t1).count();

    if (circular.cursor() % cfg.window_size() == 0) {
      ++report.boundary_checks;
      for (std::size_t j = 0; j < c.refined.size(); ++j) {
        const float d = std::abs(c.refined[j] - s.refined[j]);
        if (d > report.boundary_max_divergence) report.boundary_max_divergence = d;
      }
    }
  }

  if (report.boundary_max_divergence > tolerance)
    throw std::runtime_error("run_bench: boundary-step divergence " +
                             std::to_string(report.boundary_max_divergence) + " exceeds tolerance");

  report.circular.ms_per_step = 1000.0 * circular_sec / steps;
  report.circular.steps_per_sec = steps / circular_sec;
  report.circular.window_encodes_per_step =
      static_cast<double>(circular.counters().window_encodes - cfg.num_windows) / steps;
  report.circular.macs_per_step = circular_step_macs(cfg);
  report.sliding.ms_per_step = 1000.0 * sliding_sec / steps;
  report.sliding.steps_per_sec = steps / sliding_sec;
  report.sliding.window_encodes_per_step =
      static_cast<double>(sliding.counters().window_encodes) / steps;
  report.sliding.macs_per_step = sliding_step_macs(cfg);
  return report;
}

namespace {

void print_mode(const char* name, const BenchModeReport& m, std::ostream& out) {
  out << name << ": " << m.steps_per_sec << " steps/s, " << m.ms_per_step << " ms/step, "
      << m.window_encodes_per_step << " window encodes/step, " << m.macs_per_step.total()
      << " MACs/step (" << m.macs_per_step.window_encoder << " in the window encoder)\n";
}

}  // namespace

void print_report(const BenchReport& r, std::ostream& out) {
  print_mode("circular", r.circular, out);
  print_mode("sliding ", r.sliding, out);
  out << "window-encoder MAC ratio: "
      << static_cast<double>(r.sliding.macs_per_step.window_encoder) /
             static_cast<double>(r.circular.macs_per_step.window_encoder)
      << "\n";
  out << "wall-time ratio (sliding/circular): " << r.sliding.ms_per_step / r.circular.ms_per_step
      << "\n";
  out << "boundary agreement: " << r.boundary_checks
      << " steps checked, max divergence " << r.boundary_max_divergence << "\n";
}

}  // namespace cwct
