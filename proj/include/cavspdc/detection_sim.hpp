#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cavspdc/biphoton_correlation.hpp"

namespace cavspdc {

class Rng;

// Times in this module are seconds unless a name says otherwise.

enum class OffsetShape {
  single_mode,  // Laplace, density ~ exp(-2 pi gamma |tau|)
  trace,        // piecewise-constant density from a correlation trace
  delta,        // idler arrives with the signal
};

struct SourceConfig {
  double rate_per_s_per_mW = 0.0;  // pairs
  double pump_mW = 0.0;
  OffsetShape shape = OffsetShape::single_mode;
  double gamma_hz = 8e6;
  std::shared_ptr<const CorrelationTrace> trace;
};

void validate(const SourceConfig& source);

/// Draws tau = t_idler - t_signal from the source's correlation shape.
class OffsetSampler {
 public:
  explicit OffsetSampler(const SourceConfig& source);

  double draw(Rng& rng) const;
  /// P(lo <= tau < hi)
  double probability(double lo, double hi) const;

 private:
  double cdf(double tau) const;

  OffsetShape shape_;
  double scale_ = 0.0;          // Laplace scale 1/(2 pi gamma)
  std::vector<double> edges_;   // cell edges, trace shape
  std::vector<double> cumulative_;
};

struct PairEvent {
  double t_signal;
  double t_idler;
};

/// Poisson arrivals on [0, duration), sorted by signal time.
std::vector<PairEvent> generate_pair_events(const SourceConfig& source, double duration_s,
                                            std::uint64_t seed);

struct LossBudget {
  double alpha = 1.0;   // SMF collection, both photons
  double alpha1 = 1.0;  // per-arm collection
  double alpha2 = 1.0;
  double t = 1.0;       // single-pass band-pass filter
  double t1 = 1.0;      // long-pass filter
  double t2 = 1.0;      // filter cavity

  /// Throws Error{config} for an unknown name.
  double factor(std::string_view name) const;
  double& factor(std::string_view name);
  static const std::vector<std::string>& names();
};

void validate(const LossBudget& budget);

/// Factor names applied to each arm; arm 1 carries the signal photon.
struct ArmAssignment {
  std::vector<std::string> arm1{"alpha", "alpha1", "t1", "t2"};
  std::vector<std::string> arm2{"alpha", "alpha2", "t1", "t2"};

  static ArmAssignment cavity();
  static ArmAssignment single_pass();
};

/// Product of the named factors for an arm (1 or 2).
double arm_transmission(const LossBudget& budget, const ArmAssignment& arms, int arm);

/// Photons surviving the loss chain. Pairs keep both photons; lone survivors
/// stay as uncorrelated singles.
struct PhotonStreams {
  std::vector<double> arm1;  // sorted
  std::vector<double> arm2;  // sorted
  std::size_t pairs_surviving = 0;
};

PhotonStreams apply_losses(std::span<const PairEvent> events, const LossBudget& budget,
                           const ArmAssignment& arms, std::uint64_t seed);

enum class TriggerMode { internal, triggered };

std::string_view to_string(TriggerMode mode) noexcept;
TriggerMode parse_trigger_mode(std::string_view name);

struct DetectorConfig {
  double efficiency = 0.08;
  double gate_ns = 5.0;
  double dead_ns = 1000.0;
  double dark_per_ns = 6e-6;
  double jitter_ns = 0.0;  // rms timing jitter
};

struct DetectionChainConfig {
  DetectorConfig det1{0.08, 5.0, 1000.0, 6e-6, 0.0};
  DetectorConfig det2{0.08, 2.5, 1000.0, 6e-6, 0.0};
  TriggerMode det1_mode = TriggerMode::internal;
  TriggerMode det2_mode = TriggerMode::triggered;
  double trigger_hz = 10e6;
  double optical_delay_ns = 1000.0;     // on the detector-2 arm
  double electrical_delay_ns = 1000.0;  // on detector-1 output, the scan variable
  double duty_cycle = 0.025;            // estimator input only
};

/// Checks ranges and that detector 1 runs on its internal trigger while
/// detector 2 is triggered by it, the only arrangement simulated.
void validate(const DetectionChainConfig& chain);

/// Electrical delay that centres the detector-2 window on tau = 0.
double balanced_delay_ns(const DetectionChainConfig& chain);

struct ClickStreams {
  std::vector<double> det1;  // click times, s
  std::vector<double> det2;  // detector-2 click times, s, delayed-arm clock
  double duration_s = 0.0;
};

/// Event-by-event gated detection over [0, duration).
ClickStreams simulate_detection(const PhotonStreams& photons, const DetectionChainConfig& chain,
                                double duration_s, std::uint64_t seed);

struct CoincidenceHistogram {
  std::vector<double> delays_ns;
  std::vector<std::uint64_t> coincidences;
  std::vector<std::uint64_t> singles1;
  std::vector<std::uint64_t> singles2;
  double accumulation_s = 0.0;
  std::uint64_t seed = 0;
};

enum class ScanMethod {
  gate_sampled,  // exact sampler restricted to open gates
  full_stream,   // generate -> losses -> detection for every pair
};

struct ScanOptions {
  ScanMethod method = ScanMethod::gate_sampled;
  unsigned threads = 0;
};

CoincidenceHistogram scan_coincidences(const SourceConfig& source, const LossBudget& budget,
                                       const ArmAssignment& arms,
                                       const DetectionChainConfig& chain,
                                       std::span<const double> delays_ns, double accumulation_s,
                                       std::uint64_t seed, const ScanOptions& options = {});

/// max / min coincidences. Throws Error{undefined_snr} when min is 0.
double snr(const CoincidenceHistogram& histogram);

/// Fraction of wall time in which a pair yields a detector-1 click whose
/// partner can land in the detector-2 window at the given delay: gate
/// fraction x live fraction x window probability.
double effective_duty_cycle(const SourceConfig& source, const LossBudget& budget,
                            const ArmAssignment& arms, const DetectionChainConfig& chain,
                            double delay_ns);

/// Expected accidental coincidences per detector-1 click from uncorrelated
/// arm-2 light and darks.
double accidental_probability(const SourceConfig& source, const LossBudget& budget,
                              const ArmAssignment& arms, const DetectionChainConfig& chain);

}  // namespace cavspdc
