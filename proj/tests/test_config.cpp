#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "cwct/config.hpp"
#include "test_support.hpp"

using namespace cwct;
using cwct::testing::tiny_config;

TEST_CASE("defaults are valid and match the published geometry") {
  const ModelConfig cfg = default_config();
  CHECK(validate(cfg).empty());
  CHECK(cfg.history_len == 512);
  CHECK(cfg.trend_len == 32);
  CHECK(cfg.num_windows == 16);
  CHECK(cfg.window_size() == 32);
  CHECK(cfg.history_dim == 256);
  CHECK(cfg.trend_dim == 1024);
  CHECK(cfg.bank_dim() == 1024);
  CHECK(cfg.num_stages == 2);
  CHECK(cfg.stage_reduction == std::vector<int>{4, 4});
  CHECK(cfg.msa_heads == 4);
  CHECK(cfg.mtsm_heads == 8);
  CHECK(cfg.num_actions == 21);
  CHECK(cfg.lambda1 == doctest::Approx(0.2f));
  CHECK(cfg.lambda2 == doctest::Approx(0.7f));
  CHECK(cfg.lambda3 == doctest::Approx(0.4f));
  CHECK(cfg.decoder_swin_layers == std::vector<int>{4, 8, 4, 2});
  CHECK(cfg.decoder_expansion == std::vector<int>{2, 4, 4});
  CHECK(cfg.decoder_tokens() == std::vector<int>{16, 32, 128, 512});
}

TEST_CASE("derived shape helpers") {
  const ModelConfig cfg = default_config();
  CHECK(cfg.stage_tokens(0) == 32);
  CHECK(cfg.stage_tokens(1) == 8);
  CHECK(cfg.stage_channels(0) == 256);
  CHECK(cfg.stage_channels(1) == 512);
  CHECK(cfg.cascade_heads() == 2);

  ModelConfig few = cfg;
  few.num_actions = 3;
  CHECK(few.cascade_heads() == 1);
}

TEST_CASE("tiny config is valid") { CHECK(validate(tiny_config()).empty()); }

TEST_CASE("validate rejects each broken constraint") {
  auto expect_invalid = [](ModelConfig cfg) { CHECK(!validate(cfg).empty()); };

  ModelConfig cfg = tiny_config();
  cfg.input_dim = 0;
  expect_invalid(cfg);

  cfg = tiny_config();
  cfg.history_len = 17;  // not divisible by num_windows
  expect_invalid(cfg);

  cfg = tiny_config();
  cfg.stage_reduction = {8};  // window of 4 tokens exhausted
  expect_invalid(cfg);

  cfg = tiny_config();
  cfg.msa_heads = 3;  // 8 % 3 != 0
  expect_invalid(cfg);

  cfg = tiny_config();
  cfg.trend_dim = 32;  // breaks bank_dim == trend_dim
  expect_invalid(cfg);

  cfg = tiny_config();
  cfg.decoder_expansion = {2, 4};  // 2*4*4 != 16
  expect_invalid(cfg);

  cfg = tiny_config();
  cfg.decoder_swin_layers = {1, 1};  // must be expansions + 1 entries
  expect_invalid(cfg);

  cfg = tiny_config();
  cfg.decoder_window_size = 3;  // does not divide 4/8/16
  expect_invalid(cfg);

  cfg = tiny_config();
  cfg.num_actions = 1;
  expect_invalid(cfg);
}

TEST_CASE("config text roundtrips through write and parse") {
  const ModelConfig cfg = tiny_config();
  std::stringstream ss;
  write_config(cfg, ss);
  const ModelConfig back = parse_config(ss);
  CHECK(back.input_dim == cfg.input_dim);
  CHECK(back.history_len == cfg.history_len);
  CHECK(back.trend_len == cfg.trend_len);
  CHECK(back.num_windows == cfg.num_windows);
  CHECK(back.stage_reduction == cfg.stage_reduction);
  CHECK(back.decoder_swin_layers == cfg.decoder_swin_layers);
  CHECK(back.decoder_expansion == cfg.decoder_expansion);
  CHECK(back.num_actions == cfg.num_actions);
  CHECK(back.lambda2 == doctest::Approx(cfg.lambda2));
  CHECK(validate(back).empty());
}

TEST_CASE("parser rejects unknown keys with the line number") {
  std::stringstream ss("input_dim = 8\nnot_a_key = 3\n");
  try {
    parse_config(ss);
    FAIL("expected a parse error");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("not_a_key") != std::string::npos);
  }
}

TEST_CASE("parser handles comments and requires input_dim") {
  std::stringstream ss("# header\nhistory_len = 32  # inline\nnum_windows = 4\n");
  const ModelConfig cfg = parse_config(ss);
  CHECK(cfg.history_len == 32);
  CHECK(cfg.input_dim == 0);  // not defaulted in files
  CHECK(!validate(cfg).empty());
}
