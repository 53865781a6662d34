#include <string>

#include "cavspdc/config.hpp"
#include "cavspdc/error.hpp"
#include "doctest.h"

using namespace cavspdc;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text, "t.cfg");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

}  // namespace

TEST_CASE("shipped configuration loads completely") {
  const auto cfg = load_run_config(CAVSPDC_SOURCE_DIR "/configs/reference.cfg");
  REQUIRE(cfg.seed.has_value());
  REQUIRE(cfg.index_model);
  REQUIRE(cfg.crystal);
  REQUIRE(cfg.cavity);
  REQUIRE(cfg.comb);
  REQUIRE(cfg.source);
  REQUIRE(cfg.detectors);
  REQUIRE(cfg.losses);
  REQUIRE(cfg.scan);
  CHECK(cfg.crystal->crystal.grating_order == -1);
  CHECK(cfg.comb->spec.modes == 255);
  CHECK(cfg.comb->spec.gamma_s_hz == doctest::Approx(8e6));
  CHECK(cfg.comb->sigma_s == doctest::Approx(1.4e-9));
  CHECK(cfg.detectors->det2.gate_ns == 2.5);
  CHECK(cfg.detectors->trigger_hz == doctest::Approx(10e6));
  CHECK(cfg.detectors->electrical_delay_ns == balanced_delay_ns(*cfg.detectors));
  CHECK(cfg.losses->budget.alpha == 0.33);
  CHECK(cfg.losses->estimator == EstimatorKind::cavity);
  CHECK(cfg.source->detected_rate_per_s_per_MHz_per_mW == doctest::Approx(7.08e-4));
  CHECK(cfg.cavity->resonance.has_value());
  CHECK(cfg.scan->offsets().size() == 202);
  CHECK(cfg.scan->offsets().back() == 200.0);
}

TEST_CASE("strict parsing") {
  CHECK(config_error("[comb]\ngamma_s_MHz = 8\nfsr_GHz = 0.952\ngama_i_MHz = 8\n").find("t.cfg:4") != std::string::npos);
  CHECK(config_error("[comb]\ngamma_s_MHz = 8\nfsr_GHz = 0.952\ngamma_s_MHz = 9\n").find("duplicate") != std::string::npos);
  CHECK(config_error("[plots]\nx = 1\n").find("unknown section") != std::string::npos);
  CHECK(config_error("[scan]\n[scan]\n").find("repeated") != std::string::npos);
  CHECK(config_error("[comb]\ngamma_s_MHz = eight\nfsr_GHz = 1\n").find("gamma_s_MHz") != std::string::npos);
  CHECK(config_error("[comb]\nfsr_GHz = 1\n").find("gamma_s_MHz") != std::string::npos);
  CHECK(config_error("[comb]\ngamma_s_MHz = 8\nfsr_GHz = 1\nmodes = 4\n").find("odd") != std::string::npos);
  CHECK(config_error("[crystal]\nlength_mm = 10\n").find("index_model") != std::string::npos);
  CHECK(config_error("seed = -4\n").find("seed") != std::string::npos);
  CHECK(config_error("[losses]\nalpha_frac = 0\n").find("alpha") != std::string::npos);
  CHECK(config_error("[losses]\nbeta_frac = 0.5\n").find("beta_frac") != std::string::npos);
  CHECK(config_error("[detectors]\ndet2_mode = internal\n").find("detector") != std::string::npos);
  CHECK(config_error("[scan]\noffset_step_ns = 0\n").find("offset_step_ns") != std::string::npos);
  CHECK(config_error("[source]\nshape = gaussian\n").find("shape") != std::string::npos);
  CHECK(config_error("just words\n").find("key = value") != std::string::npos);
}

TEST_CASE("comments, seed and defaults") {
  const auto cfg = parse_run_config("# header\nseed = 17 # trailing\n\n[scan]\naccumulation_s = 2\n");
  CHECK(cfg.seed == 17u);
  REQUIRE(cfg.scan);
  CHECK(cfg.scan->accumulation_s == 2.0);
  CHECK_FALSE(cfg.comb.has_value());
  CHECK_THROWS_AS(need(cfg.comb, "comb"), Error);
}

TEST_CASE("missing file is an io error") {
  try {
    load_run_config("/nonexistent/x.cfg");
    FAIL("loaded");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }
}
