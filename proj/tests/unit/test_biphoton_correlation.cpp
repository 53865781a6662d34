#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cavspdc/biphoton_correlation.hpp"
#include "cavspdc/error.hpp"
#include "doctest.h"

using namespace cavspdc;
using std::numbers::pi;

namespace {

CombSpec comb(int modes, double gamma = 8e6, double fsr = 0.952e9, double tau0 = 0.0) {
  CombSpec s;
  s.gamma_s_hz = gamma;
  s.gamma_i_hz = gamma;
  s.fsr_hz = fsr;
  s.modes = modes;
  s.tau0_s = tau0;
  return s;
}

G2Options point() { return {ModePairing::paired, Sampling::point, 1}; }

std::vector<std::size_t> local_maxima(const std::vector<double>& v, double floor) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    if (v[k] > floor && v[k] >= v[k - 1] && v[k] > v[k + 1]) out.push_back(k);
  }
  return out;
}

}  // namespace

TEST_CASE("grid layout") {
  const auto g = TauGrid::symmetric(150e-9, 0.05e-9);
  CHECK(g.count == 6001);
  CHECK(g.at(0) == -g.at(g.count - 1));
  CHECK(g.at(3000) == 0.0);
  CHECK_THROWS_AS(TauGrid::symmetric(1e-9, 0.0), Error);
}

TEST_CASE("single-mode function values") {
  CHECK(g2_single_mode(8e6, 0.0) == 1.0);
  CHECK(g2_single_mode(8e6, 27.66e-9) == doctest::Approx(0.249).epsilon(2e-3));
  CHECK(g2_single_mode(8e6, -5e-9) == g2_single_mode(8e6, 5e-9));
}

TEST_CASE("one mode collapses to the single-mode exponential") {
  const auto grid = TauGrid::symmetric(150e-9, 0.05e-9);
  for (auto sampling : {Sampling::point}) {
    const auto tr = g2_multimode(comb(1), grid, {ModePairing::paired, sampling, 1});
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.values.size(); ++k) {
      worst = std::max(worst, std::abs(tr.values[k] - g2_single_mode(8e6, tr.tau(k))));
    }
    CHECK(worst < 1e-9);
  }
  const auto u = g2_multimode(comb(1), grid, {ModePairing::unconstrained, Sampling::point, 1});
  for (std::size_t k = 0; k < u.values.size(); k += 97) {
    CHECK(u.values[k] == doctest::Approx(g2_single_mode(8e6, u.tau(k))).epsilon(1e-9));
  }
}

TEST_CASE("trace invariants") {
  const auto tr = g2_multimode(comb(255), TauGrid::symmetric(60e-9, 0.05e-9), point());
  CHECK(*std::max_element(tr.values.begin(), tr.values.end()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*std::min_element(tr.values.begin(), tr.values.end()) >= 0.0);
  for (std::size_t k = 0; k < tr.values.size(); ++k) {
    CHECK(std::abs(tr.values[k] - tr.values[tr.values.size() - 1 - k]) < 1e-9);
  }
}

TEST_CASE("comb teeth sit at multiples of the round trip and follow the envelope") {
  const double fsr = 0.952e9;
  const double step = 1.0 / (20.0 * fsr);
  const auto tr = g2_multimode(comb(255), TauGrid::symmetric(40.0 / fsr, step), point());
  const auto peaks = local_maxima(tr.values, 1e-3);
  REQUIRE(peaks.size() >= 70);
  for (std::size_t j = 1; j < peaks.size(); ++j) {
    CHECK(std::abs((tr.tau(peaks[j]) - tr.tau(peaks[j - 1])) - 1.0 / fsr) <= step);
  }
  const double per_tooth = std::exp(-2.0 * pi * 8e6 / fsr);
  CHECK(per_tooth == doctest::Approx(0.94857).epsilon(1e-5));
  const std::size_t centre = tr.values.size() / 2;
  for (int k = 1; k <= 30; ++k) {
    const double v = tr.values[centre + 20 * k];
    CHECK(std::abs(v / std::pow(per_tooth, k) - 1.0) < 1e-6);
  }
}

TEST_CASE("comb spacing holds for small mode counts on a fine grid") {
  for (int m : {3, 5, 15}) {
    const double step = 0.002e-9;
    const auto tr = g2_multimode(comb(m), TauGrid::symmetric(6e-9, step), point());
    const auto peaks = local_maxima(tr.values, 0.5);
    REQUIRE(peaks.size() >= 5);
    for (std::size_t j = 1; j < peaks.size(); ++j) {
      CHECK(std::abs(tr.tau(peaks[j]) - tr.tau(peaks[j - 1]) - 1.0 / 0.952e9) <= step);
    }
  }
}

TEST_CASE("crystal delay shifts the trace by half the delay") {
  const double step = 0.05e-9;
  const auto tr = g2_multimode(comb(1, 8e6, 0.952e9, 10e-9), TauGrid::symmetric(50e-9, step), point());
  const auto it = std::max_element(tr.values.begin(), tr.values.end());
  CHECK(tr.tau(static_cast<std::size_t>(it - tr.values.begin())) == doctest::Approx(5e-9).epsilon(1e-6));
}

TEST_CASE("cell averages match fine quadrature of the point trace") {
  const double step = 0.05e-9;
  const auto spec = comb(7, 8e6, 0.952e9);
  const auto coarse = g2_multimode(spec, TauGrid::symmetric(3e-9, step),
                                   {ModePairing::paired, Sampling::cell_average, 1});
  // midpoint rule on 400 sub-cells per cell; midpoints are the odd points of a grid at step/800
  const int sub = 400;
  const std::int64_t half_cells = 61;
  const auto fine = g2_multimode(spec, TauGrid{-2 * sub * half_cells, step / (2 * sub),
                                               static_cast<std::size_t>(4 * sub * half_cells)},
                                 point());
  std::vector<double> ref(coarse.values.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const std::int64_t n = coarse.grid.first + static_cast<std::int64_t>(k);
    double acc = 0.0;
    for (int j = 0; j < sub; ++j) {
      const std::int64_t idx = 2 * sub * n - sub + 2 * j + 1 - fine.grid.first;
      acc += fine.values[static_cast<std::size_t>(idx)];
    }
    ref[k] = acc / sub;
  }
  const double top = *std::max_element(ref.begin(), ref.end());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    CHECK(std::abs(coarse.values[k] - ref[k] / top) < 1e-6);
  }
}

TEST_CASE("comb spec validation") {
  const auto grid = TauGrid::symmetric(10e-9, 0.05e-9);
  CHECK_THROWS_AS(g2_multimode(comb(4), grid), Error);
  CHECK_THROWS_AS(g2_multimode(comb(0), grid), Error);
  CHECK_THROWS_AS(g2_multimode(comb(3, -1.0), grid), Error);
}

TEST_CASE("detector response") {
  CHECK(detector_response(1.4e-9, 0.0) == 1.0);
  CHECK(detector_response(1.4e-9, 1.4e-9) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(detector_response(1.4e-9, 2.8e-9) == doctest::Approx(0.0183).epsilon(2e-3));
  CHECK_THROWS_AS(detector_response(0.0, 1.0), Error);
  CHECK_THROWS_AS(detector_response(-1e-9, 1.0), Error);
}

TEST_CASE("convolution agrees with direct quadrature") {
  const double step = 0.05e-9;
  for (double sigma : {0.2e-9, 1.4e-9, 5e-9}) {
    const auto tr = g2_multimode(comb(31), TauGrid::symmetric(100e-9, step), point());
    REQUIRE(tr.values.size() <= 4096);
    const auto out = convolve_response(tr, sigma);
    std::vector<double> ref(tr.values.size());
    for (std::size_t j = 0; j < ref.size(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < ref.size(); ++k) {
        acc += tr.values[k] * std::exp(-std::pow((tr.tau(j) - tr.tau(k)) / sigma, 2));
      }
      ref[j] = acc;
    }
    const double top = *std::max_element(ref.begin(), ref.end());
    for (std::size_t j = 0; j < ref.size(); ++j) {
      CHECK(std::abs(out.values[j] - ref[j] / top) <= 1e-9 * std::max(ref[j] / top, 1e-3));
    }
    CHECK(out.sigma_s == sigma);
  }
}

TEST_CASE("convolution limits and resolution") {
  const double step = 0.05e-9;
  const auto tr = g2_multimode(comb(1), TauGrid::symmetric(50e-9, step), point());
  const auto same = convolve_response(tr, step / 100);
  for (std::size_t k = 0; k < tr.values.size(); ++k) CHECK(std::abs(same.values[k] - tr.values[k]) < 1e-3);

  CorrelationTrace impulse;
  impulse.grid = TauGrid::symmetric(10e-9, step);
  impulse.values.assign(impulse.grid.count, 0.0);
  impulse.values[impulse.grid.count / 2] = 1.0;
  const auto h = convolve_response(impulse, 1.4e-9);
  for (std::size_t k = 0; k < h.values.size(); ++k) {
    CHECK(h.values[k] == doctest::Approx(detector_response(1.4e-9, h.tau(k))).epsilon(1e-12));
  }

  try {
    convolve_response(tr, 0.1e-9);
    FAIL("expected resolution error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::resolution);
  }
  CHECK_THROWS_AS(convolve_response(tr, 0.0), Error);
}

TEST_CASE("fwhm of known shapes") {
  std::vector<double> tri(201);
  for (int k = 0; k <= 200; ++k) tri[k] = 1.0 - std::abs(k - 100) / 40.0 > 0 ? 1.0 - std::abs(k - 100) / 40.0 : 0.0;
  CHECK(fwhm(tri, 0.5) == doctest::Approx(20.0).epsilon(1e-12));

  const double step = 0.05e-9;
  const auto e = g2_multimode(comb(1), TauGrid::symmetric(150e-9, step), point());
  CHECK(std::abs(fwhm(e) - 27.58e-9) < 0.1e-9);
  CHECK(std::abs(fwhm(e) - std::log(2.0) / (pi * 8e6)) < 0.1e-9);

  const double sigma = 1.4e-9;
  std::vector<double> gauss(2001);
  for (int k = 0; k < 2001; ++k) gauss[k] = std::exp(-std::pow((k - 1000) * step / sigma, 2));
  CHECK(std::abs(fwhm(gauss, step) - 2.0 * sigma * std::sqrt(std::log(2.0))) < step);

  std::vector<double> flat(10, 1.0);
  try {
    fwhm(flat, 1.0);
    FAIL("expected shape error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::shape);
  }
}

TEST_CASE("coherence time") {
  CHECK(coherence_time(8e6) * 1e9 == doctest::Approx(27.66).epsilon(1e-3));
  CHECK(coherence_time(16e6) * 1e9 == doctest::Approx(13.83).epsilon(1e-3));
  CHECK(std::abs(coherence_time(8e6) / (std::log(2.0) / (pi * 8e6)) - 1.0) < 3e-3);
}
