#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cavspdc/detection_sim.hpp"
#include "cavspdc/error.hpp"
#include "cavspdc/rng.hpp"
#include "doctest.h"

using namespace cavspdc;
using std::numbers::pi;

namespace {

SourceConfig source(double rate, double pump = 1.0, OffsetShape shape = OffsetShape::single_mode) {
  SourceConfig s;
  s.rate_per_s_per_mW = rate;
  s.pump_mW = pump;
  s.shape = shape;
  s.gamma_hz = 8e6;
  return s;
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

DetectorConfig ideal_detector(double gate_ns) { return {1.0, gate_ns, 0.0, 0.0, 0.0}; }

LossBudget table_one() {
  LossBudget b;
  b.alpha = 0.33;
  b.alpha1 = 0.82;
  b.alpha2 = 0.86;
  b.t1 = 0.78;
  b.t2 = 0.84;
  return b;
}

}  // namespace

TEST_CASE("rng streams are reproducible and derived seeds differ") {
  Rng a(42), b(42);
  for (int k = 0; k < 100; ++k) CHECK(a.bits() == b.bits());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  Rng u(1);
  double mean = 0.0;
  for (int k = 0; k < 100000; ++k) mean += u.normal();
  CHECK(std::abs(mean / 100000) < 5.0 / std::sqrt(100000.0));
}

TEST_CASE("pair generation statistics") {
  const auto ev = generate_pair_events(source(1e4), 10.0, 1);
  CHECK(std::abs(static_cast<double>(ev.size()) - 1e5) < 5.0 * std::sqrt(1e5));
  CHECK(std::is_sorted(ev.begin(), ev.end(), [](auto& x, auto& y) { return x.t_signal < y.t_signal; }));
  CHECK(generate_pair_events(source(0.0), 10.0, 1).empty());
  const auto again = generate_pair_events(source(1e4), 10.0, 1);
  REQUIRE(again.size() == ev.size());
  CHECK(std::equal(ev.begin(), ev.end(), again.begin(),
                   [](auto& x, auto& y) { return x.t_signal == y.t_signal && x.t_idler == y.t_idler; }));
}

TEST_CASE("single-mode offsets follow the two-sided exponential") {
  const OffsetSampler s(source(1.0));
  Rng rng(9);
  const int n = 1000000;
  const double bin = 2e-9;
  const int bins = 100;  // +-100 ns
  std::vector<double> hist(bins, 0.0);
  int outside = 0;
  for (int k = 0; k < n; ++k) {
    const double t = s.draw(rng);
    const int b = static_cast<int>(std::floor((t + bins * bin / 2) / bin));
    if (b < 0 || b >= bins) ++outside;
    else hist[b] += 1.0;
  }
  const double scale = 1.0 / (2.0 * pi * 8e6);
  auto cdf = [&](double x) { return x < 0 ? 0.5 * std::exp(x / scale) : 1.0 - 0.5 * std::exp(-x / scale); };
  double chi2 = 0.0;
  int dof = 0;
  for (int b = 0; b < bins; ++b) {
    const double lo = -bins * bin / 2 + b * bin;
    const double expect = n * (cdf(lo + bin) - cdf(lo));
    if (expect < 5) continue;
    chi2 += std::pow(hist[b] - expect, 2) / expect;
    ++dof;
  }
  CHECK(chi2 / (dof - 1) < 2.0);
  CHECK(s.probability(-1.0, 1.0) == doctest::Approx(1.0));
  CHECK(s.probability(0.0, 1e-8) == doctest::Approx(cdf(1e-8) - 0.5).epsilon(1e-12));
}

TEST_CASE("trace offsets follow the trace weights") {
  auto tr = std::make_shared<CorrelationTrace>();
  tr->grid = TauGrid{-1, 1e-9, 3};
  tr->values = {1.0, 2.0, 1.0};
  auto src = source(1.0, 1.0, OffsetShape::trace);
  src.trace = tr;
  const OffsetSampler s(src);
  CHECK(s.probability(-0.5e-9, 0.5e-9) == doctest::Approx(0.5));
  CHECK(s.probability(-2e-9, 0.0) == doctest::Approx(0.5));
  Rng rng(1);
  int mid = 0;
  for (int k = 0; k < 100000; ++k) mid += std::abs(s.draw(rng)) < 0.5e-9;
  CHECK(std::abs(mid - 50000) < 5 * std::sqrt(25000.0));
  src.trace = nullptr;
  CHECK(kind_of([&] { OffsetSampler{src}; }) == ErrorKind::argument);
}

TEST_CASE("loss thinning") {
  const auto ev = generate_pair_events(source(1e5), 10.0, 2);
  const auto same = apply_losses(ev, LossBudget{}, ArmAssignment::cavity(), 3);
  REQUIRE(same.arm1.size() == ev.size());
  REQUIRE(same.pairs_surviving == ev.size());
  for (std::size_t k = 0; k < ev.size(); ++k) CHECK(same.arm1[k] == ev[k].t_signal);

  LossBudget half;
  half.alpha1 = 0.5;
  const auto thinned = apply_losses(ev, half, ArmAssignment::cavity(), 4);
  const double n = static_cast<double>(ev.size());
  CHECK(std::abs(static_cast<double>(thinned.pairs_surviving) - n / 2) < 5 * std::sqrt(n / 4));
  CHECK(thinned.arm2.size() == ev.size());

  const auto b = table_one();
  const double frac = arm_transmission(b, ArmAssignment::cavity(), 1) * arm_transmission(b, ArmAssignment::cavity(), 2);
  CHECK(frac == doctest::Approx(0.0330).epsilon(2e-3));
  const auto t1 = apply_losses(ev, b, ArmAssignment::cavity(), 5);
  CHECK(std::abs(static_cast<double>(t1.pairs_surviving) - n * frac) < 5 * std::sqrt(n * frac * (1 - frac)));

  CHECK(kind_of([&] { b.factor("beta"); }) == ErrorKind::config);
  ArmAssignment bad;
  bad.arm1.push_back("beta");
  CHECK(kind_of([&] { apply_losses(ev, b, bad, 1); }) == ErrorKind::config);
}

TEST_CASE("detector-1 dark clicks") {
  DetectionChainConfig c;
  const auto clicks = simulate_detection({}, c, 1.0, 7);
  CHECK(std::abs(static_cast<double>(clicks.det1.size()) - 300.0) < 5 * std::sqrt(300.0));
}

TEST_CASE("ideal gate always clicks and dead time blocks") {
  PhotonStreams p;
  for (int k = 0; k < 20000; ++k) p.arm1.push_back(k * 0.5e-9);
  DetectionChainConfig c;
  c.det1 = ideal_detector(5.0);
  c.det2 = ideal_detector(2.5);
  CHECK(simulate_detection(p, c, 10e-6, 1).det1.size() == 100);

  c.det1.dead_ns = 1000.0;
  const auto blocked = simulate_detection(p, c, 10e-6, 1).det1;
  CHECK(blocked.size() <= 10);
  CHECK(blocked.size() >= 9);
  for (std::size_t k = 1; k < blocked.size(); ++k) CHECK(blocked[k] - blocked[k - 1] >= 1e-6);

  PhotonStreams two;
  two.arm1 = {1e-6, 1.1e-6};
  c.trigger_hz = 1e9 / 5.0;  // gates back to back
  CHECK(simulate_detection(two, c, 1e-5, 3).det1.size() == 1);
}

TEST_CASE("chain validation") {
  DetectionChainConfig c;
  c.det2_mode = TriggerMode::internal;
  CHECK(kind_of([&] { validate(c); }) == ErrorKind::argument);
  DetectionChainConfig d;
  d.det1.efficiency = 0.0;
  CHECK(kind_of([&] { validate(d); }) == ErrorKind::argument);
  DetectionChainConfig j;
  j.det2.jitter_ns = -1.0;
  CHECK(kind_of([&] { validate(j); }) == ErrorKind::argument);
  CHECK(balanced_delay_ns(DetectionChainConfig{}) == 1000.0 - 1.25);
  CHECK(parse_trigger_mode("triggered") == TriggerMode::triggered);
  CHECK(kind_of([] { parse_trigger_mode("auto"); }) == ErrorKind::config);
}

TEST_CASE("ideal chain with a delta source pairs every click") {
  DetectionChainConfig c;
  c.det1 = ideal_detector(5.0);
  c.det2 = ideal_detector(2.5);
  const auto src = source(2e5, 1.0, OffsetShape::delta);
  const std::vector<double> delay{balanced_delay_ns(c)};
  for (auto method : {ScanMethod::full_stream, ScanMethod::gate_sampled}) {
    const auto h = scan_coincidences(src, LossBudget{}, ArmAssignment::cavity(), c, delay, 1.0, 11,
                                     {method, 1});
    CHECK(h.singles1[0] > 1000);
    CHECK(h.coincidences[0] == h.singles1[0]);
  }
}

TEST_CASE("far delays sit on the accidental floor") {
  DetectionChainConfig c;
  c.det1.efficiency = 0.3;
  c.det2.efficiency = 0.3;
  c.det2.dark_per_ns = 1e-3;
  const auto src = source(4e6);
  const auto b = table_one();
  const std::vector<double> delay{balanced_delay_ns(c) + 400.0};
  for (auto method : {ScanMethod::gate_sampled, ScanMethod::full_stream}) {
    const double seconds = method == ScanMethod::full_stream ? 4.0 : 20.0;
    const auto h = scan_coincidences(src, b, ArmAssignment::cavity(), c, delay, seconds, 5, {method, 1});
    const double mean = h.singles1[0] * accidental_probability(src, b, ArmAssignment::cavity(), c);
    CHECK(mean > 100);
    CHECK(std::abs(static_cast<double>(h.coincidences[0]) - mean) < 5 * std::sqrt(mean));
  }
}

TEST_CASE("gate-sampled and full-stream scans agree") {
  DetectionChainConfig c;
  c.det1.efficiency = 0.5;
  c.det2.efficiency = 0.5;
  c.det1.jitter_ns = 0.3;
  c.det2.jitter_ns = 0.3;
  c.det1.dead_ns = 200.0;
  const auto src = source(1.5e6);
  const auto b = table_one();
  std::vector<double> delays;
  for (double o : {-20.0, 0.0, 15.0}) delays.push_back(balanced_delay_ns(c) + o);
  const auto fast = scan_coincidences(src, b, ArmAssignment::cavity(), c, delays, 20.0, 1,
                                      {ScanMethod::gate_sampled, 1});
  const auto slow = scan_coincidences(src, b, ArmAssignment::cavity(), c, delays, 12.0, 2,
                                      {ScanMethod::full_stream, 1});
  for (std::size_t k = 0; k < delays.size(); ++k) {
    const double a = fast.coincidences[k] / 20.0;
    const double s = slow.coincidences[k] / 12.0;
    const double sigma = std::sqrt(fast.coincidences[k] / 400.0 + slow.coincidences[k] / 144.0);
    CHECK(slow.coincidences[k] > 150);
    CHECK(std::abs(a - s) < 5 * sigma);
    CHECK(std::abs(fast.singles1[k] / 20.0 - slow.singles1[k] / 12.0) <
          5 * std::sqrt(fast.singles1[k] / 400.0 + slow.singles1[k] / 144.0));
  }
}

TEST_CASE("scans are independent of the thread count") {
  DetectionChainConfig c;
  const auto src = source(4e5, 7.92);
  std::vector<double> delays;
  for (int k = -10; k <= 10; ++k) delays.push_back(balanced_delay_ns(c) + 3.0 * k);
  for (auto method : {ScanMethod::gate_sampled, ScanMethod::full_stream}) {
    const auto a = scan_coincidences(src, table_one(), ArmAssignment::cavity(), c, delays, 0.5, 3, {method, 1});
    const auto b = scan_coincidences(src, table_one(), ArmAssignment::cavity(), c, delays, 0.5, 3, {method, 4});
    CHECK(a.coincidences == b.coincidences);
    CHECK(a.singles1 == b.singles1);
  }
}

TEST_CASE("signal to noise") {
  CoincidenceHistogram flat;
  flat.coincidences = {5, 5, 5};
  CHECK(snr(flat) == 1.0);
  CoincidenceHistogram h;
  h.coincidences = {98, 259, 120};
  CHECK(snr(h) == doctest::Approx(2.64).epsilon(2e-3));
  h.coincidences = {0, 12};
  CHECK(kind_of([&] { snr(h); }) == ErrorKind::undefined_snr);
}

TEST_CASE("effective duty cycle") {
  DetectionChainConfig c;
  c.det1.dark_per_ns = 0.0;
  const auto weak = source(1.0, 1e-6, OffsetShape::delta);
  // negligible click rate: gate fraction times full window capture
  CHECK(effective_duty_cycle(weak, LossBudget{}, ArmAssignment::cavity(), c, balanced_delay_ns(c)) ==
        doctest::Approx(0.05).epsilon(1e-6));
  CHECK(effective_duty_cycle(weak, LossBudget{}, ArmAssignment::cavity(), c, balanced_delay_ns(c) + 10.0) == 0.0);
  c.det1.jitter_ns = 0.5;
  const double j = effective_duty_cycle(weak, LossBudget{}, ArmAssignment::cavity(), c, balanced_delay_ns(c));
  const double expect = 0.05 * std::erf(1.25 / (0.5 * std::sqrt(2.0)));
  CHECK(j == doctest::Approx(expect).epsilon(1e-6));
}
