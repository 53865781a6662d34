#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cavspdc/phase_matching.hpp"

namespace cavspdc {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct Segment {
  std::string name;
  double length_mm = 0.0;
  std::map<std::string, double, std::less<>> index;  // wavelength label -> n
};

struct CavityGeometry {
  std::vector<Segment> segments;
  std::map<std::string, double, std::less<>> input_transmittance;
  std::map<std::string, double, std::less<>> output_transmittance;
};

void validate(const CavityGeometry& geometry);

/// One-pass optical path sum(n L) in mm. Throws Error{lookup} for a label
/// missing from any segment.
double optical_path_mm(const CavityGeometry& geometry, std::string_view wavelength);

/// c / (2 sum(n L)), Hz.
double free_spectral_range(const CavityGeometry& geometry, std::string_view wavelength);

double finesse(double fsr_hz, double bandwidth_hz);
double circulating_power(double leaked_mW, double output_transmittance);
/// lambda / (2 F), same unit as lambda.
double resonance_length_tolerance(double lambda_nm, double finesse);
/// lambda / (F L |delta dn/dT|), K. Throws Error{no_detuning} when the
/// differential slope is zero.
double temperature_detuning_fwhm(double lambda_nm, double finesse, double crystal_length_mm,
                                 double differential_dndT);

std::vector<double> mode_comb(double center_hz, double spacing_hz, int modes);

struct CombSpec {
  double gamma_s_hz = 8e6;   // full width
  double gamma_i_hz = 8e6;
  double fsr_hz = 0.952e9;
  int modes = 255;           // odd
  double tau0_s = 0.0;
  double omega_s_hz = 0.0;   // informational; cancels under normalization
  double omega_i_hz = 0.0;
};

void validate(const CombSpec& spec);

// Triple-resonance search.

struct ResonanceCrystal {
  IndexModel model;
  double length_mm = 10.0;
  Axis pump = Axis::y;
  Axis signal = Axis::y;
  Axis idler = Axis::z;
};

struct TripleResonanceSetup {
  ResonanceCrystal crystal1;
  ResonanceCrystal crystal2;
  double passive_path_mm = 0.0;  // nominal one-pass path outside the crystals (n = 1)
  double pump_nm = 780.0;
  double bandwidth_hz = 8e6;
  int mode_window = 0;           // extra signal modes tried either side of degeneracy
  unsigned threads = 0;
};

struct TemperatureGrid {
  double lo_C = 0.0;
  double hi_C = 0.0;
  int steps = 1;  // sample count, lo..hi inclusive

  double at(int k) const { return steps == 1 ? lo_C : lo_C + (hi_C - lo_C) * k / (steps - 1); }
};

struct ResonancePoint {
  double t1_C;
  double t2_C;
  double residual_hz;
};

/// Smallest half-detuning |nu_p - nu_s - nu_i| / 2 between a pump-locked
/// cavity and its signal/idler combs at one temperature pair.
double triple_resonance_residual(const TripleResonanceSetup& setup, double t1_C, double t2_C);

/// Grid points whose residual is within half the bandwidth, sorted by
/// residual then (T1, T2).
std::vector<ResonancePoint> find_triple_resonance(const TripleResonanceSetup& setup,
                                                  const TemperatureGrid& t1,
                                                  const TemperatureGrid& t2);

}  // namespace cavspdc
