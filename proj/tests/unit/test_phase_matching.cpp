#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cavspdc/config.hpp"
#include "cavspdc/error.hpp"
#include "cavspdc/phase_matching.hpp"
#include "doctest.h"

using namespace cavspdc;
using std::numbers::pi;

namespace {

IndexModel constant_model(double ny, double nz, double dndt_y = 0.0, double t_ref = 22.0) {
  IndexModel m;
  m.y = AxisDispersion::constant(ny, dndt_y);
  m.z = AxisDispersion::constant(nz);
  m.t_ref_C = t_ref;
  return m;
}

// n_y(780)/780 - n_y(1560)/1560 - n_z(1560)/1560 = 1/46200 per nm
QpmCrystal matched_crystal(double dndt_y = 0.0, double t_ref = 22.0) {
  QpmCrystal c;
  c.length_mm = 10.0;
  c.period_um = 46.2;
  c.grating_order = 1;
  c.model = constant_model(1.8, 1.8 - 1560.0 / 46200.0, dndt_y, t_ref);
  return c;
}

QpmCrystal reference_crystal() {
  return need(load_run_config(CAVSPDC_SOURCE_DIR "/configs/reference.cfg").crystal, "crystal").crystal;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("refractive index of constant models") {
  const auto m = constant_model(1.8, 1.7);
  CHECK(refractive_index(m, Axis::y, 1560.0, 22.0) == doctest::Approx(1.8).epsilon(1e-15));
  const auto slope = constant_model(1.8, 1.7, 1e-5);
  CHECK(refractive_index(slope, Axis::y, 1560.0, 32.0) == doctest::Approx(1.8001).epsilon(1e-14));
  CHECK(thermo_optic_slope(slope, Axis::y, 1000.0) == 1e-5);
}

TEST_CASE("index range errors name the parameter") {
  const auto m = constant_model(1.8, 1.7);
  try {
    refractive_index(m, Axis::y, 3000.0, 22.0);
    FAIL("expected range error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::range);
    CHECK(std::string(e.what()).find("wavelength") != std::string::npos);
  }
  try {
    refractive_index(m, Axis::z, 1560.0, 120.0);
    FAIL("expected range error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::range);
    CHECK(std::string(e.what()).find("temperature") != std::string::npos);
  }
}

TEST_CASE("axis names") {
  CHECK(parse_axis("y") == Axis::y);
  CHECK(parse_axis("z") == Axis::z);
  CHECK(kind_of([] { parse_axis("x"); }) == ErrorKind::lookup);
}

TEST_CASE("calibrated model has normal dispersion") {
  const auto c = reference_crystal();
  for (Axis a : {Axis::y, Axis::z}) {
    for (double T : {0.0, 22.0, 60.0, 100.0}) {
      double prev = refractive_index(c.model, a, 700.0, T);
      for (double l = 702.0; l <= 1700.0; l += 2.0) {
        const double n = refractive_index(c.model, a, l, T);
        REQUIRE(n < prev);
        prev = n;
      }
    }
  }
}

TEST_CASE("qpm mismatch of a constructed perfect match") {
  const auto c = matched_crystal();
  CHECK(std::abs(qpm_mismatch(c, 780.0, 1560.0, 1560.0, 22.0)) < 1e-4);

  auto wider = c;
  wider.period_um *= 1.01;
  const double exact = 2.0 * pi * (1.0 / 46.2e-6 - 1.0 / (1.01 * 46.2e-6));
  const double dk = qpm_mismatch(wider, 780.0, 1560.0, 1560.0, 22.0);
  CHECK(dk == doctest::Approx(exact).epsilon(1e-9));
  CHECK(std::abs(dk) == doctest::Approx(1.36e3).epsilon(0.02));

  auto flipped = c;
  flipped.grating_order = -1;
  flipped.model.z = AxisDispersion::constant(1.8 + 1560.0 / 46200.0);
  CHECK(std::abs(qpm_mismatch(flipped, 780.0, 1560.0, 1560.0, 22.0)) < 1e-4);
}

TEST_CASE("qpm mismatch rejects energy violation") {
  const auto c = matched_crystal();
  CHECK(kind_of([&] { qpm_mismatch(c, 780.0, 1560.0, 1500.0, 22.0); }) == ErrorKind::invariant);
}

TEST_CASE("tuning curve") {
  const auto flat = matched_crystal();
  for (const auto& p : tuning_curve(flat, 780.0, 1560.0, 1560.0, 0.0, 50.0, 51)) {
    CHECK(p.normalized_power == doctest::Approx(1.0).epsilon(1e-12));
  }

  // dk = a (T - 22) with a = 2 pi 1e9 s / 1560 rad/(m K); first zeros at dk L / 2 = +-pi
  const double s = 1e-5;
  const auto c = matched_crystal(s);
  const double a = 2.0 * pi * 1e9 * s / 1560.0;
  const double half = 2.0 * pi / (a * 0.01);
  const auto curve = tuning_curve(c, 780.0, 1560.0, 1560.0, 22.0 - half, 22.0 + half, 3);
  CHECK(curve[0].normalized_power < 1e-12);
  CHECK(curve[1].normalized_power == doctest::Approx(1.0));
  CHECK(curve[2].normalized_power < 1e-12);
  const auto near = tuning_curve(c, 780.0, 1560.0, 1560.0, 22.0 - 0.9 * half, 22.0 + 0.9 * half, 3);
  CHECK(near[0].normalized_power > 1e-3);

  CHECK(kind_of([&] { tuning_curve(c, 780.0, 1560.0, 1560.0, 30.0, 20.0, 10); }) == ErrorKind::argument);
  CHECK(kind_of([&] { tuning_curve(c, 780.0, 1560.0, 1560.0, 20.0, 30.0, 0); }) == ErrorKind::argument);
}

TEST_CASE("degenerate temperature by bisection") {
  CHECK(degenerate_temperature(matched_crystal(1e-5), 780.0, 10.0, 40.0) ==
        doctest::Approx(22.0).epsilon(1e-6));
  CHECK(degenerate_temperature(matched_crystal(-1e-5), 780.0, 10.0, 40.0) ==
        doctest::Approx(22.0).epsilon(1e-6));
  // root on the lower edge
  const auto edge = matched_crystal(1e-5, 10.0);
  CHECK(std::abs(qpm_mismatch(edge, 780.0, 1560.0, 1560.0,
                              degenerate_temperature(edge, 780.0, 10.0, 40.0))) <= kDegenerateTolerance);
  CHECK(kind_of([] { degenerate_temperature(matched_crystal(1e-5), 780.0, 30.0, 40.0); }) ==
        ErrorKind::root_not_bracketed);
}

TEST_CASE("calibrated crystal is degenerate at 22 C") {
  const auto c = reference_crystal();
  const double T = degenerate_temperature(c, 780.007, 10.0, 40.0);
  CHECK(std::abs(T - 22.0) <= 0.1);
  const auto curve = tuning_curve(c, 780.007, 1560.014, 1560.014, 0.0, 50.0, 501);
  const auto best = std::max_element(curve.begin(), curve.end(), [](auto& x, auto& y) {
    return x.normalized_power < y.normalized_power;
  });
  CHECK(std::abs(best->temperature_C - T) <= 0.1);
  CHECK(std::abs(best->temperature_C - 22.0) <= 0.1);
}
