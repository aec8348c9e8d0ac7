// Command-line front end: init | stream | verify | bench | eval.
//
// Exit codes: 0 success, 1 check failure (verify tolerance, bench
// assertion), 2 config problem, 3 dimension mismatch, 4 data mismatch.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cwct/bench.hpp"
#include "cwct/config.hpp"
#include "cwct/engine.hpp"
#include "cwct/io.hpp"
#include "cwct/metrics.hpp"
#include "cwct/weights.hpp"

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDimension = 3;
constexpr int kExitData = 4;

struct CliError {
  int code;
  std::string message;
};

cwct::ModelConfig read_config(const std::string& path) {
  try {
    cwct::ModelConfig cfg = cwct::load_config(path);
    const auto problems = cwct::validate(cfg);
    if (!problems.empty()) {
      std::string msg = "invalid config " + path + ":";
      for (const auto& p : problems) msg += "\n  " + p;
      throw CliError{kExitConfig, msg};
    }
    return cfg;
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    throw CliError{kExitConfig, std::string("config: ") + e.what()};
  }
}

// Weights come from a file when given, otherwise from the seed. The store
// must match the config either way.
cwct::WeightStore read_weights(const cwct::ModelConfig& cfg, const std::string& path,
                               std::uint64_t seed) {
  cwct::WeightStore store;
  if (path.empty()) {
    store = cwct::init_weights(cfg, seed);
  } else {
    try {
      store = cwct::load_weights(path);
    } catch (const std::exception& e) {
      throw CliError{kExitData, e.what()};
    }
  }
  try {
    cwct::check_store(cfg, store);
  } catch (const std::exception& e) {
    throw CliError{kExitDimension, e.what()};
  }
  return store;
}

cwct::Matrix read_or_make_features(const cwct::ModelConfig& cfg, const std::string& path,
                                   int random_frames, std::uint64_t seed) {
  if (path.empty() && random_frames <= 0)
    throw CliError{kExitConfig, "need --features or --random N"};
  if (!path.empty()) {
    cwct::Matrix f;
    try {
      f = cwct::load_features(path);
    } catch (const std::exception& e) {
      throw CliError{kExitData, e.what()};
    }
    if (f.cols != cfg.input_dim)
      throw CliError{kExitDimension, "feature dim " + std::to_string(f.cols) +
                                         " does not match config input_dim " +
                                         std::to_string(cfg.input_dim)};
    return f;
  }
  cwct::Matrix f(random_frames, cfg.input_dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (float& v : f.data) v = dist(rng);
  return f;
}

int cmd_init(const std::string& config_path, std::uint64_t seed, const std::string& out_path) {
  const cwct::ModelConfig cfg = read_config(config_path);
  const cwct::WeightStore store = cwct::init_weights(cfg, seed);
  cwct::save_weights(store, out_path);
  std::cout << "wrote " << store.size() << " tensors to " << out_path << "\n";
  return 0;
}

int cmd_stream(const std::string& config_path, const std::string& weights_path,
               const std::string& features_path, const std::string& out_path,
               std::uint64_t seed) {
  const cwct::ModelConfig cfg = read_config(config_path);
  const cwct::WeightStore store = read_weights(cfg, weights_path, seed);
  const cwct::Matrix features = read_or_make_features(cfg, features_path, 0, seed);

  cwct::Engine engine(cfg, store);
  cwct::Matrix probs(features.rows, cfg.num_actions);
  for (int t = 0; t < features.rows; ++t) {
    const cwct::StepResult r = engine.step(features.row_span(t));
    std::copy(r.refined.begin(), r.refined.end(), probs.row(t));
  }
  cwct::save_predictions(probs, out_path);
  std::cout << "wrote " << probs.rows << " prediction rows to " << out_path << "\n";
  return 0;
}

int cmd_verify(const std::string& config_path, const std::string& weights_path,
               const std::string& features_path, int random_frames, std::uint64_t seed,
               float tolerance, int corrupt_window) {
  const cwct::ModelConfig cfg = read_config(config_path);
  const cwct::WeightStore store = read_weights(cfg, weights_path, seed);
  const cwct::Matrix features = read_or_make_features(cfg, features_path, random_frames, seed);

  cwct::Engine engine(cfg, store);
  float worst = 0.0f;
  int worst_step = -1;
  for (int t = 0; t < features.rows; ++t) {
    const cwct::StepResult s = engine.step(features.row_span(t));
    const cwct::BatchResult b = engine.batch_forward();
    // Both heads are compared: the cascade can saturate and hide small
    // divergences the coarse distribution still shows.
    for (std::size_t j = 0; j < s.refined.size(); ++j) {
      const int col = static_cast<int>(j);
      const float d =
          std::max(std::abs(s.refined[j] - b.refined.at(b.refined.rows - 1, col)),
                   std::abs(s.coarse[j] - b.coarse.at(b.coarse.rows - 1, col)));
      if (d > worst) {
        worst = d;
        worst_step = t;
      }
    }
  }
  if (corrupt_window >= 0) {
    // Fault injection: perturb one cached summary after the last step (so
    // no re-encode can wash it out) and replay the cached inference path
    // against the cache-free batch oracle.
    engine.corrupt_summary(corrupt_window, 1.0f);
    cwct::Matrix trend = engine.padded_trend();
    cwct::add_inplace(trend, cwct::sinusoidal_positions(cfg.trend_len, cfg.trend_dim));
    const cwct::DownstreamResult cached = cwct::run_downstream(engine.cached_bank(), trend, cfg, store);
    const cwct::BatchResult b = engine.batch_forward();
    for (std::size_t i = 0; i < cached.coarse.data.size(); ++i) {
      const float d = std::max(std::abs(cached.coarse.data[i] - b.coarse.data[i]),
                               std::abs(cached.refined.data[i] - b.refined.data[i]));
      if (d > worst) {
        worst = d;
        worst_step = features.rows;
      }
    }
  }
  std::printf("max streaming/batch divergence: %.9g (step %d) over %d steps, tolerance %.9g\n",
              static_cast<double>(worst), worst_step, features.rows,
              static_cast<double>(tolerance));
  if (worst <= tolerance) {
    std::cout << "verify: PASS\n";
    return 0;
  }
  // Localize which cached summary disagrees with a fresh recomputation.
  const auto residuals = engine.summary_residuals();
  int bad = 0;
  for (std::size_t n = 1; n < residuals.size(); ++n)
    if (residuals[n] > residuals[bad]) bad = static_cast<int>(n);
  std::printf("verify: FAIL — cache residual peaks at window %d (%.9g)\n", bad,
              static_cast<double>(residuals[bad]));
  return kExitCheckFailed;
}

int cmd_bench(const std::string& config_path, const std::string& weights_path, int steps,
              std::uint64_t seed) {
  const cwct::ModelConfig cfg = read_config(config_path);
  const cwct::WeightStore store = read_weights(cfg, weights_path, seed);
  try {
    const cwct::BenchReport report = cwct::run_bench(cfg, store, steps, seed);
    cwct::print_report(report, std::cout);
  } catch (const std::runtime_error& e) {
    std::cerr << e.what() << "\n";
    return kExitCheckFailed;
  }
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& labels_path) {
  cwct::Matrix scores;
  std::vector<int> labels;
  try {
    scores = cwct::load_predictions(pred_path);
    labels = cwct::load_labels(labels_path);
  } catch (const std::exception& e) {
    throw CliError{kExitData, e.what()};
  }
  if (static_cast<int>(labels.size()) != scores.rows)
    throw CliError{kExitData, "frame count mismatch: " + std::to_string(scores.rows) +
                                  " predictions vs " + std::to_string(labels.size()) + " labels"};
  for (int y : labels)
    if (y >= scores.cols)
      throw CliError{kExitData, "label class " + std::to_string(y) + " outside the " +
                                    std::to_string(scores.cols) + " prediction columns"};
  cwct::EvalSummary s;
  try {
    s = cwct::evaluate_scores(scores, labels);
  } catch (const std::exception& e) {
    throw CliError{kExitData, e.what()};
  }
  const int skipped = scores.cols - 1 - s.ap_classes;
  if (skipped > 0)
    std::cerr << "warning: " << skipped << " action class(es) without positives skipped\n";
  std::printf("mAP %.4f over %d classes\n", s.mean_ap, s.ap_classes);
  if (s.cap_classes > 0)
    std::printf("mcAP %.4f over %d classes\n", s.mean_cap, s.cap_classes);
  else
    std::cout << "mcAP undefined (no class with both positives and negatives)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming online-action-detection inference engine"};
  app.require_subcommand(1);

  std::string config_path, weights_path, features_path, labels_path, out_path, pred_path;
  std::uint64_t seed = 0;
  int steps = 64;
  int random_frames = 0;
  float tolerance = 1e-5f;
  int corrupt_window = -1;

  CLI::App* init = app.add_subcommand("init", "Create a seeded weight file");
  init->add_option("--config", config_path)->required();
  init->add_option("--seed", seed);
  init->add_option("--out", out_path)->required();

  CLI::App* stream = app.add_subcommand("stream", "Run streaming inference over a feature file");
  stream->add_option("--config", config_path)->required();
  stream->add_option("--weights", weights_path);
  stream->add_option("--features", features_path)->required();
  stream->add_option("--out", out_path)->required();
  stream->add_option("--seed", seed);

  CLI::App* verify = app.add_subcommand("verify", "Compare streaming against batch recomputation");
  verify->add_option("--config", config_path)->required();
  verify->add_option("--weights", weights_path);
  verify->add_option("--features", features_path);
  verify->add_option("--random", random_frames, "Generate N random frames instead of a file");
  verify->add_option("--seed", seed);
  verify->add_option("--tolerance", tolerance);
  verify->add_option("--corrupt-window", corrupt_window,
                     "Debug: perturb this cached window summary mid-run");

  CLI::App* bench = app.add_subcommand("bench", "Time circular vs sliding updating");
  bench->add_option("--config", config_path)->required();
  bench->add_option("--weights", weights_path);
  bench->add_option("--steps", steps);
  bench->add_option("--seed", seed);

  CLI::App* eval = app.add_subcommand("eval", "Score predictions against labels (mAP / mcAP)");
  eval->add_option("--pred", pred_path)->required();
  eval->add_option("--labels", labels_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (init->parsed()) return cmd_init(config_path, seed, out_path);
    if (stream->parsed())
      return cmd_stream(config_path, weights_path, features_path, out_path, seed);
    if (verify->parsed())
      return cmd_verify(config_path, weights_path, features_path, random_frames, seed, tolerance,
                        corrupt_window);
    if (bench->parsed()) return cmd_bench(config_path, weights_path, steps, seed);
    if (eval->parsed()) return cmd_eval(pred_path, labels_path);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return 0;
}
