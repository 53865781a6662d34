#include "cavspdc/detection_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cavspdc/error.hpp"
#include "cavspdc/parallel.hpp"
#include "cavspdc/rng.hpp"

namespace cavspdc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_unit_interval(double x) { return x > 0.0 && x <= 1.0; }

}  // namespace

void validate(const SourceConfig& s) {
  require(s.rate_per_s_per_mW >= 0.0, ErrorKind::argument, "source rate must be >= 0");
  require(s.pump_mW >= 0.0, ErrorKind::argument, "pump power must be >= 0");
  if (s.shape == OffsetShape::single_mode) {
    require(s.gamma_hz > 0.0, ErrorKind::argument, "source gamma must be positive");
  }
  if (s.shape == OffsetShape::trace) {
    require(s.trace && !s.trace->values.empty(), ErrorKind::argument,
            "trace-shaped source needs a correlation trace");
  }
}

OffsetSampler::OffsetSampler(const SourceConfig& source) : shape_(source.shape) {
  validate(source);
  switch (shape_) {
    case OffsetShape::single_mode:
      scale_ = 1.0 / (2.0 * std::numbers::pi * source.gamma_hz);
      break;
    case OffsetShape::trace: {
      const auto& tr = *source.trace;
      const double dt = tr.grid.step_s;
      edges_.resize(tr.values.size() + 1);
      cumulative_.resize(tr.values.size() + 1);
      cumulative_[0] = 0.0;
      for (std::size_t k = 0; k < tr.values.size(); ++k) {
        edges_[k] = tr.tau(k) - dt / 2.0;
        require(tr.values[k] >= 0.0, ErrorKind::argument, "trace has negative values");
        cumulative_[k + 1] = cumulative_[k] + tr.values[k];
      }
      edges_.back() = tr.tau(tr.values.size() - 1) + dt / 2.0;
      const double total = cumulative_.back();
      require(total > 0.0, ErrorKind::argument, "trace has zero total weight");
      for (auto& c : cumulative_) c /= total;
      break;
    }
    case OffsetShape::delta:
      break;
  }
}

double OffsetSampler::draw(Rng& rng) const {
  switch (shape_) {
    case OffsetShape::single_mode: {
      const double magnitude = rng.exponential() * scale_;
      return rng.uniform() < 0.5 ? -magnitude : magnitude;
    }
    case OffsetShape::trace: {
      const double u = rng.uniform();
      auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), u);
      if (it == cumulative_.end()) --it;
      const auto k = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
      return edges_[k] + rng.uniform() * (edges_[k + 1] - edges_[k]);
    }
    case OffsetShape::delta:
      return 0.0;
  }
  return 0.0;
}

// P(tau < x)
double OffsetSampler::cdf(double x) const {
  switch (shape_) {
    case OffsetShape::single_mode:
      return x < 0.0 ? 0.5 * std::exp(x / scale_) : 1.0 - 0.5 * std::exp(-x / scale_);
    case OffsetShape::trace: {
      if (x <= edges_.front()) return 0.0;
      if (x >= edges_.back()) return 1.0;
      auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
      const auto k = static_cast<std::size_t>(it - edges_.begin()) - 1;
      const double frac = (x - edges_[k]) / (edges_[k + 1] - edges_[k]);
      return cumulative_[k] + frac * (cumulative_[k + 1] - cumulative_[k]);
    }
    case OffsetShape::delta:
      return x > 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

double OffsetSampler::probability(double lo, double hi) const {
  return hi <= lo ? 0.0 : cdf(hi) - cdf(lo);
}

std::vector<PairEvent> generate_pair_events(const SourceConfig& source, double duration_s,
                                            std::uint64_t seed) {
  require(duration_s > 0.0, ErrorKind::argument, "duration must be positive");
  const OffsetSampler offsets(source);
  const double rate = source.rate_per_s_per_mW * source.pump_mW;
  std::vector<PairEvent> events;
  if (rate <= 0.0) return events;
  events.reserve(static_cast<std::size_t>(rate * duration_s * 1.05) + 16);
  Rng rng(seed);
  double t = 0.0;
  while (true) {
    t += rng.exponential() / rate;
    if (t >= duration_s) break;
    events.push_back({t, t + offsets.draw(rng)});
  }
  return events;
}

const std::vector<std::string>& LossBudget::names() {
  static const std::vector<std::string> n{"alpha", "alpha1", "alpha2", "t", "t1", "t2"};
  return n;
}

double& LossBudget::factor(std::string_view name) {
  if (name == "alpha") return alpha;
  if (name == "alpha1") return alpha1;
  if (name == "alpha2") return alpha2;
  if (name == "t") return t;
  if (name == "t1") return t1;
  if (name == "t2") return t2;
  fail(ErrorKind::config, "unknown loss factor '" + std::string(name) + "'");
}

double LossBudget::factor(std::string_view name) const {
  return const_cast<LossBudget&>(*this).factor(name);
}

void validate(const LossBudget& b) {
  for (const auto& n : LossBudget::names()) {
    require(in_unit_interval(b.factor(n)), ErrorKind::argument,
            "loss factor " + n + " must be in (0, 1]");
  }
}

ArmAssignment ArmAssignment::cavity() { return {}; }

ArmAssignment ArmAssignment::single_pass() {
  return {{"alpha1", "t"}, {"alpha2", "t"}};
}

double arm_transmission(const LossBudget& budget, const ArmAssignment& arms, int arm) {
  require(arm == 1 || arm == 2, ErrorKind::argument, "arm must be 1 or 2");
  double p = 1.0;
  for (const auto& name : arm == 1 ? arms.arm1 : arms.arm2) p *= budget.factor(name);
  return p;
}

PhotonStreams apply_losses(std::span<const PairEvent> events, const LossBudget& budget,
                           const ArmAssignment& arms, std::uint64_t seed) {
  validate(budget);
  const double s1 = arm_transmission(budget, arms, 1);
  const double s2 = arm_transmission(budget, arms, 2);
  PhotonStreams out;
  out.arm1.reserve(static_cast<std::size_t>(events.size() * s1 * 1.1) + 16);
  out.arm2.reserve(static_cast<std::size_t>(events.size() * s2 * 1.1) + 16);
  Rng rng(seed);
  for (const auto& e : events) {
    const bool keep1 = rng.bernoulli(s1);
    const bool keep2 = rng.bernoulli(s2);
    if (keep1) out.arm1.push_back(e.t_signal);
    if (keep2) out.arm2.push_back(e.t_idler);
    if (keep1 && keep2) ++out.pairs_surviving;
  }
  std::sort(out.arm2.begin(), out.arm2.end());
  return out;
}

std::string_view to_string(TriggerMode mode) noexcept {
  return mode == TriggerMode::internal ? "internal" : "triggered";
}

TriggerMode parse_trigger_mode(std::string_view name) {
  if (name == "internal") return TriggerMode::internal;
  if (name == "triggered") return TriggerMode::triggered;
  fail(ErrorKind::config, "unknown trigger mode '" + std::string(name) + "'");
}

void validate(const DetectionChainConfig& c) {
  for (const auto* d : {&c.det1, &c.det2}) {
    require(in_unit_interval(d->efficiency), ErrorKind::argument,
            "detector efficiency must be in (0, 1]");
    require(d->gate_ns >= 0.0 && d->dead_ns >= 0.0, ErrorKind::argument,
            "detector gate and dead time must be >= 0");
    require(d->dark_per_ns >= 0.0, ErrorKind::argument, "dark count rate must be >= 0");
    require(d->jitter_ns >= 0.0, ErrorKind::argument, "timing jitter must be >= 0");
  }
  require(in_unit_interval(c.duty_cycle), ErrorKind::argument, "duty cycle must be in (0, 1]");
  require(c.trigger_hz > 0.0, ErrorKind::argument, "trigger rate must be positive");
  require(c.det1.gate_ns <= 1e9 / c.trigger_hz, ErrorKind::argument,
          "detector-1 gate longer than the trigger period");
  require(c.det1_mode == TriggerMode::internal && c.det2_mode == TriggerMode::triggered,
          ErrorKind::argument,
          "only detector 1 on internal trigger with detector 2 triggered by it is simulated");
}

double balanced_delay_ns(const DetectionChainConfig& c) {
  return c.optical_delay_ns - c.det2.gate_ns / 2.0;
}

ClickStreams simulate_detection(const PhotonStreams& photons, const DetectionChainConfig& chain,
                                double duration_s, std::uint64_t seed) {
  validate(chain);
  require(duration_s > 0.0, ErrorKind::argument, "duration must be positive");
  require(std::is_sorted(photons.arm1.begin(), photons.arm1.end()) &&
              std::is_sorted(photons.arm2.begin(), photons.arm2.end()),
          ErrorKind::argument, "photon streams must be time-ordered");
  Rng rng(seed);
  const double period = 1.0 / chain.trigger_hz;
  const double w1 = chain.det1.gate_ns * 1e-9;
  const double dead1 = chain.det1.dead_ns * 1e-9;
  const double w2 = chain.det2.gate_ns * 1e-9;
  const double dead2 = chain.det2.dead_ns * 1e-9;
  const double d_e = chain.electrical_delay_ns * 1e-9;
  const double d_opt = chain.optical_delay_ns * 1e-9;
  const double j1 = chain.det1.jitter_ns * 1e-9;
  const double j2 = chain.det2.jitter_ns * 1e-9;
  const double phase = rng.uniform() * period;

  // detector-1 darks: Poisson in gate-open time, gates ignoring dead time
  std::vector<double> darks;
  const double dark1 = chain.det1.dark_per_ns * 1e9;
  if (dark1 > 0.0 && w1 > 0.0) {
    const auto gates = static_cast<std::int64_t>(std::ceil((duration_s - phase) / period));
    std::int64_t k = 0;
    double o = 0.0;
    while (true) {
      double e = rng.exponential() / dark1;
      if (e < w1 - o) {
        o += e;
      } else {
        e -= w1 - o;
        const double skip = std::floor(e / w1);
        k += 1 + static_cast<std::int64_t>(skip);
        o = e - skip * w1;
      }
      if (k >= gates) break;
      const double t = phase + static_cast<double>(k) * period + o;
      if (t < duration_s) darks.push_back(t);
    }
  }

  ClickStreams out;
  out.duration_s = duration_s;
  double last_click = -kInf;
  std::int64_t last_gate = -1;
  std::size_t ip = 0;
  std::size_t id = 0;
  while (ip < photons.arm1.size() || id < darks.size()) {
    const bool dark =
        ip >= photons.arm1.size() || (id < darks.size() && darks[id] < photons.arm1[ip]);
    const double t = dark ? darks[id++] : photons.arm1[ip++];
    if (t < phase || t >= duration_s) continue;
    const auto k = static_cast<std::int64_t>(std::floor((t - phase) / period));
    const double gate_start = phase + static_cast<double>(k) * period;
    if (t - gate_start >= w1) continue;
    if (k == last_gate || gate_start < last_click + dead1) continue;
    if (!dark && !rng.bernoulli(chain.det1.efficiency)) continue;
    out.det1.push_back(t);
    last_click = t;
    last_gate = k;
  }

  // detector 2 sees the optically delayed arm-2 light inside each triggered window
  const double dark2 = chain.det2.dark_per_ns * 1e9;
  double last2 = -kInf;
  for (const double c : out.det1) {
    const double ws = c + d_e + (j1 > 0.0 ? j1 * rng.normal() : 0.0);
    const double we = ws + w2;
    if (ws < last2 + dead2) continue;
    double best = kInf;
    const double reach = 6.0 * j2;
    auto it = std::lower_bound(photons.arm2.begin(), photons.arm2.end(), ws - d_opt - reach);
    for (; it != photons.arm2.end() && *it + d_opt < we + reach; ++it) {
      const double t = *it + d_opt + (j2 > 0.0 ? j2 * rng.normal() : 0.0);
      if (t >= ws && t < we && rng.bernoulli(chain.det2.efficiency)) {
        best = t;
        break;
      }
    }
    if (dark2 > 0.0) {
      const double d = ws + rng.exponential() / dark2;
      if (d < we) best = std::min(best, d);
    }
    if (best < kInf) {
      out.det2.push_back(best);
      last2 = best;
    }
  }
  return out;
}

namespace {

struct PointCounts {
  std::uint64_t coincidences = 0;
  std::uint64_t singles1 = 0;
  std::uint64_t singles2 = 0;
};

PointCounts full_stream_point(const SourceConfig& source, const LossBudget& budget,
                              const ArmAssignment& arms, DetectionChainConfig chain,
                              double delay_ns, double accumulation_s, std::uint64_t seed) {
  chain.electrical_delay_ns = delay_ns;
  const auto events = generate_pair_events(source, accumulation_s, derive_seed(seed, 0));
  const auto photons = apply_losses(events, budget, arms, derive_seed(seed, 1));
  const auto clicks = simulate_detection(photons, chain, accumulation_s, derive_seed(seed, 2));
  return {clicks.det2.size(), clicks.det1.size(), clicks.det2.size()};
}

// Samples only what the detectors can see. Detector-1 events are generated in
// gate-open time at the detected-signal intensity plus darks; the sampled
// region (open, live gate time up to a click) is a stopping set, so arm-2
// light whose partner signal fell there is thinned by the probability that
// the signal went undetected, and everything else is unconditioned.
PointCounts gate_sampled_point(const SourceConfig& source, const OffsetSampler& offsets,
                               double s1, double s2, const DetectionChainConfig& chain,
                               double delay_ns, double accumulation_s, std::uint64_t seed) {
  Rng rng(seed);
  const double period = 1e9 / chain.trigger_hz;  // ns from here on
  const double w1 = chain.det1.gate_ns;
  const double dead1 = chain.det1.dead_ns;
  const double w2 = chain.det2.gate_ns;
  const double dead2 = chain.det2.dead_ns;
  const double eta1 = chain.det1.efficiency;
  const double eta2 = chain.det2.efficiency;
  const double jitter = std::hypot(chain.det1.jitter_ns, chain.det2.jitter_ns);
  const double pair_rate = source.rate_per_s_per_mW * source.pump_mW * 1e-9;
  const double signal_rate = pair_rate * s1 * eta1;
  const double lambda1 = signal_rate + chain.det1.dark_per_ns;
  const double p_signal = lambda1 > 0.0 ? signal_rate / lambda1 : 0.0;
  const double span = accumulation_s * 1e9;
  const double phase = rng.uniform() * period;
  const auto gates = static_cast<std::int64_t>(std::ceil((span - phase) / period));

  std::vector<double> clicks;
  std::vector<double> partners;  // detector-2 clock
  if (lambda1 > 0.0 && w1 > 0.0) {
    std::int64_t k = 0;
    double o = 0.0;
    while (true) {
      double e = rng.exponential() / lambda1;
      if (e < w1 - o) {
        o += e;
      } else {
        e -= w1 - o;
        const double skip = std::floor(e / w1);
        k += 1 + static_cast<std::int64_t>(skip);
        o = std::min(e - skip * w1, std::nextafter(w1, 0.0));
      }
      if (k >= gates) break;
      const double c = phase + static_cast<double>(k) * period + o;
      clicks.push_back(c);
      if (rng.uniform() < p_signal && rng.bernoulli(s2 * eta2)) {
        double t = c + offsets.draw(rng) * 1e9 + chain.optical_delay_ns;
        if (jitter > 0.0) t += jitter * rng.normal();
        partners.push_back(t);
      }
      k += std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((o + dead1) / period)));
      o = 0.0;
    }
  }
  std::sort(partners.begin(), partners.end());

  auto sampled = [&](double ts) {
    const double rel = ts - phase;
    if (rel < 0.0) return false;
    const auto k = static_cast<std::int64_t>(std::floor(rel / period));
    if (k >= gates) return false;
    const double g = phase + static_cast<double>(k) * period;
    if (ts - g >= w1) return false;
    auto it = std::upper_bound(clicks.begin(), clicks.end(), ts);
    if (it == clicks.begin()) return true;
    const double c = *(it - 1);
    return c < g && g >= c + dead1;
  };

  const double background_mean = pair_rate * s2 * eta2 * w2;
  const double undetected = 1.0 - s1 * eta1;
  const double dark2 = chain.det2.dark_per_ns;
  PointCounts counts;
  counts.singles1 = clicks.size();
  double last2 = -kInf;
  for (const double c : clicks) {
    const double ws = c + delay_ns;
    const double we = ws + w2;
    if (ws < last2 + dead2) continue;
    double best = kInf;
    auto it = std::lower_bound(partners.begin(), partners.end(), ws);
    if (it != partners.end() && *it < we) best = *it;
    const std::uint64_t n = rng.poisson_small(background_mean);
    for (std::uint64_t j = 0; j < n; ++j) {
      const double t = ws + rng.uniform() * w2;
      const double ts = t - chain.optical_delay_ns - offsets.draw(rng) * 1e9;
      if (!sampled(ts) || rng.uniform() < undetected) best = std::min(best, t);
    }
    if (dark2 > 0.0) {
      const double d = ws + rng.exponential() / dark2;
      if (d < we) best = std::min(best, d);
    }
    if (best < kInf) {
      ++counts.coincidences;
      last2 = best;
    }
  }
  counts.singles2 = counts.coincidences;
  return counts;
}

}  // namespace

CoincidenceHistogram scan_coincidences(const SourceConfig& source, const LossBudget& budget,
                                       const ArmAssignment& arms,
                                       const DetectionChainConfig& chain,
                                       std::span<const double> delays_ns, double accumulation_s,
                                       std::uint64_t seed, const ScanOptions& options) {
  require(!delays_ns.empty(), ErrorKind::argument, "delay list is empty");
  require(accumulation_s > 0.0, ErrorKind::argument, "accumulation time must be positive");
  validate(source);
  validate(budget);
  validate(chain);
  const OffsetSampler offsets(source);
  const double s1 = arm_transmission(budget, arms, 1);
  const double s2 = arm_transmission(budget, arms, 2);

  const std::size_t n = delays_ns.size();
  std::vector<PointCounts> points(n);
  parallel_for(n, options.threads, [&](std::size_t k) {
    const std::uint64_t point_seed = derive_seed(seed, k);
    points[k] = options.method == ScanMethod::full_stream
                    ? full_stream_point(source, budget, arms, chain, delays_ns[k],
                                        accumulation_s, point_seed)
                    : gate_sampled_point(source, offsets, s1, s2, chain, delays_ns[k],
                                         accumulation_s, point_seed);
  });

  CoincidenceHistogram h;
  h.delays_ns.assign(delays_ns.begin(), delays_ns.end());
  h.accumulation_s = accumulation_s;
  h.seed = seed;
  for (const auto& p : points) {
    h.coincidences.push_back(p.coincidences);
    h.singles1.push_back(p.singles1);
    h.singles2.push_back(p.singles2);
  }
  return h;
}

double snr(const CoincidenceHistogram& h) {
  require(h.coincidences.size() >= 2, ErrorKind::argument, "SNR needs at least 2 delay points");
  const auto [lo, hi] = std::minmax_element(h.coincidences.begin(), h.coincidences.end());
  if (*lo == 0) fail(ErrorKind::undefined_snr, "minimum coincidence count is 0; extend accumulation");
  return static_cast<double>(*hi) / static_cast<double>(*lo);
}

double effective_duty_cycle(const SourceConfig& source, const LossBudget& budget,
                            const ArmAssignment& arms, const DetectionChainConfig& chain,
                            double delay_ns) {
  validate(source);
  validate(chain);
  const double s1 = arm_transmission(budget, arms, 1);
  const double period = 1e9 / chain.trigger_hz;
  const double w1 = chain.det1.gate_ns;
  const double lambda1 =
      source.rate_per_s_per_mW * source.pump_mW * 1e-9 * s1 * chain.det1.efficiency +
      chain.det1.dark_per_ns;
  double exposure_fraction = w1 / period;
  if (lambda1 > 0.0) {
    // renewal cycle: geometric run of live gates up to a click, then blocked gates
    const double q = -std::expm1(-lambda1 * w1);
    const double blocked = std::max(0.0, std::ceil((w1 / 2.0 + chain.det1.dead_ns) / period) - 1.0);
    exposure_fraction = (1.0 / lambda1) / ((1.0 / q + blocked) * period);
  }
  const OffsetSampler offsets(source);
  const double lo = (delay_ns - chain.optical_delay_ns) * 1e-9;
  const double w2 = chain.det2.gate_ns * 1e-9;
  const double sj = std::hypot(chain.det1.jitter_ns, chain.det2.jitter_ns) * 1e-9;
  if (sj == 0.0) return exposure_fraction * offsets.probability(lo, lo + w2);
  // average the window over the relative jitter (Simpson, +-8 sigma)
  constexpr int n = 800;
  const double h = 16.0 * sj / n;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double j = -8.0 * sj + k * h;
    const double wgt = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += wgt * std::exp(-0.5 * (j / sj) * (j / sj)) * offsets.probability(lo - j, lo - j + w2);
  }
  const double window = acc * h / 3.0 / (sj * std::sqrt(2.0 * std::numbers::pi));
  return exposure_fraction * window;
}

double accidental_probability(const SourceConfig& source, const LossBudget& budget,
                              const ArmAssignment& arms, const DetectionChainConfig& chain) {
  const double s2 = arm_transmission(budget, arms, 2);
  const double rate = source.rate_per_s_per_mW * source.pump_mW * 1e-9 * s2 *
                          chain.det2.efficiency +
                      chain.det2.dark_per_ns;
  return -std::expm1(-rate * chain.det2.gate_ns);
}

}  // namespace cavspdc
