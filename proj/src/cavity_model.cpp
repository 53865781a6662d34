#include "cavspdc/cavity_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "cavspdc/error.hpp"
#include "cavspdc/parallel.hpp"

namespace cavspdc {

void validate(const CavityGeometry& g) {
  require(!g.segments.empty(), ErrorKind::argument, "cavity has no segments");
  for (const auto& s : g.segments) {
    require(s.length_mm > 0.0, ErrorKind::argument, "segment '" + s.name + "' length must be > 0");
    for (const auto& [label, n] : s.index) {
      require(n >= 1.0, ErrorKind::argument,
              "segment '" + s.name + "' index at " + label + " must be >= 1");
    }
  }
  for (const auto* mirror : {&g.input_transmittance, &g.output_transmittance}) {
    for (const auto& [label, t] : *mirror) {
      require(t > 0.0 && t < 1.0, ErrorKind::argument,
              "mirror transmittance at " + label + " must be in (0, 1)");
      for (const auto& s : g.segments) {
        require(s.index.contains(label), ErrorKind::lookup,
                "segment '" + s.name + "' has no index for wavelength " + label);
      }
    }
  }
}

double optical_path_mm(const CavityGeometry& g, std::string_view wavelength) {
  double path = 0.0;
  for (const auto& s : g.segments) {
    auto it = s.index.find(wavelength);
    require(it != s.index.end(), ErrorKind::lookup,
            "segment '" + s.name + "' has no index for wavelength " + std::string(wavelength));
    path += it->second * s.length_mm;
  }
  return path;
}

double free_spectral_range(const CavityGeometry& g, std::string_view wavelength) {
  return kSpeedOfLight / (2.0 * optical_path_mm(g, wavelength) * 1e-3);
}

double finesse(double fsr_hz, double bandwidth_hz) {
  require(fsr_hz > 0.0 && bandwidth_hz > 0.0, ErrorKind::argument,
          "finesse: FSR and bandwidth must be positive");
  return fsr_hz / bandwidth_hz;
}

double circulating_power(double leaked_mW, double t_out) {
  require(t_out > 0.0 && t_out < 1.0, ErrorKind::argument,
          "circulating power: output transmittance must be in (0, 1)");
  require(leaked_mW >= 0.0, ErrorKind::argument, "circulating power: leaked power must be >= 0");
  return leaked_mW / t_out;
}

double resonance_length_tolerance(double lambda_nm, double F) {
  require(lambda_nm > 0.0 && F > 0.0, ErrorKind::argument,
          "resonance tolerance: wavelength and finesse must be positive");
  return lambda_nm / (2.0 * F);
}

double temperature_detuning_fwhm(double lambda_nm, double F, double length_mm, double d_dndT) {
  require(lambda_nm > 0.0 && F > 0.0 && length_mm > 0.0, ErrorKind::argument,
          "temperature detuning: wavelength, finesse and length must be positive");
  if (d_dndT == 0.0) fail(ErrorKind::no_detuning, "zero differential thermo-optic slope");
  return (lambda_nm * 1e-9) / (F * length_mm * 1e-3 * std::abs(d_dndT));
}

std::vector<double> mode_comb(double center, double spacing, int modes) {
  require(modes >= 1 && modes % 2 == 1, ErrorKind::argument, "mode count must be odd and >= 1");
  const int half = (modes - 1) / 2;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(modes));
  for (int m = -half; m <= half; ++m) out.push_back(center + m * spacing);
  return out;
}

void validate(const CombSpec& s) {
  require(s.gamma_s_hz > 0.0 && s.gamma_i_hz > 0.0, ErrorKind::argument,
          "comb: damping rates must be positive");
  require(s.fsr_hz > s.gamma_s_hz && s.fsr_hz > s.gamma_i_hz, ErrorKind::argument,
          "comb: FSR must exceed both damping rates");
  require(s.modes >= 1 && s.modes % 2 == 1, ErrorKind::argument, "comb: mode count must be odd");
  require(s.tau0_s >= 0.0, ErrorKind::argument, "comb: tau0 must be >= 0");
}

namespace {

double crystal_path_mm(const ResonanceCrystal& c, Axis axis, double lambda_nm, double T) {
  return refractive_index(c.model, axis, lambda_nm, T) * c.length_mm;
}

struct Paths {
  double pump, signal, idler;  // mm
};

Paths paths_at(const TripleResonanceSetup& s, double passive_mm, double t1, double t2) {
  const double ls = 2.0 * s.pump_nm;
  return {
      passive_mm + crystal_path_mm(s.crystal1, s.crystal1.pump, s.pump_nm, t1) +
          crystal_path_mm(s.crystal2, s.crystal2.pump, s.pump_nm, t2),
      passive_mm + crystal_path_mm(s.crystal1, s.crystal1.signal, ls, t1) +
          crystal_path_mm(s.crystal2, s.crystal2.signal, ls, t2),
      passive_mm + crystal_path_mm(s.crystal1, s.crystal1.idler, ls, t1) +
          crystal_path_mm(s.crystal2, s.crystal2.idler, ls, t2),
  };
}

// Pump lock: the passive path is re-solved so that the pump one-pass path is
// exactly q_p half-wavelengths, with q_p fixed at the reference point.
double locked_passive_mm(const TripleResonanceSetup& s, double q_pump, double t1, double t2) {
  const Paths raw = paths_at(s, 0.0, t1, t2);
  return q_pump * s.pump_nm * 1e-6 / 2.0 - raw.pump;
}

double pump_order(const TripleResonanceSetup& s, double t1, double t2) {
  const Paths nominal = paths_at(s, s.passive_path_mm, t1, t2);
  return std::round(2.0 * nominal.pump / (s.pump_nm * 1e-6));
}

double residual_for_order(const TripleResonanceSetup& s, double q_pump, double t1, double t2) {
  const double passive = locked_passive_mm(s, q_pump, t1, t2);
  require(passive > 0.0, ErrorKind::invariant, "pump lock drives the passive path below zero");
  const Paths p = paths_at(s, passive, t1, t2);
  const double nu_p = kSpeedOfLight / (s.pump_nm * 1e-9);
  const double fsr_s = kSpeedOfLight / (2.0 * p.signal * 1e-3);
  const double fsr_i = kSpeedOfLight / (2.0 * p.idler * 1e-3);
  const double q_s0 = std::round(nu_p / 2.0 / fsr_s);
  double best = std::numeric_limits<double>::infinity();
  for (int w = -s.mode_window; w <= s.mode_window; ++w) {
    const double q_s = q_s0 + w;
    const double rest = nu_p - q_s * fsr_s;
    const double q_i = std::round(rest / fsr_i);
    const double delta = rest - q_i * fsr_i;
    best = std::min(best, std::abs(delta) / 2.0);
  }
  return best;
}

}  // namespace

double triple_resonance_residual(const TripleResonanceSetup& s, double t1, double t2) {
  return residual_for_order(s, pump_order(s, t1, t2), t1, t2);
}

std::vector<ResonancePoint> find_triple_resonance(const TripleResonanceSetup& s,
                                                  const TemperatureGrid& g1,
                                                  const TemperatureGrid& g2) {
  require(g1.steps >= 1 && g2.steps >= 1, ErrorKind::argument, "temperature grids are empty");
  require(s.bandwidth_hz > 0.0, ErrorKind::argument, "bandwidth must be positive");
  require(s.mode_window >= 0, ErrorKind::argument, "mode window must be >= 0");
  validate(s.crystal1.model);
  validate(s.crystal2.model);
  const double q_pump = pump_order(s, g1.at(0), g2.at(0));

  const std::size_t n1 = static_cast<std::size_t>(g1.steps);
  const std::size_t n2 = static_cast<std::size_t>(g2.steps);
  std::vector<double> residual(n1 * n2);
  parallel_for(n1 * n2, s.threads, [&](std::size_t k) {
    const double t1 = g1.at(static_cast<int>(k / n2));
    const double t2 = g2.at(static_cast<int>(k % n2));
    residual[k] = residual_for_order(s, q_pump, t1, t2);
  });

  std::vector<ResonancePoint> out;
  for (std::size_t k = 0; k < residual.size(); ++k) {
    if (residual[k] <= s.bandwidth_hz / 2.0) {
      out.push_back({g1.at(static_cast<int>(k / n2)), g2.at(static_cast<int>(k % n2)), residual[k]});
    }
  }
  std::sort(out.begin(), out.end(), [](const ResonancePoint& a, const ResonancePoint& b) {
    return std::tie(a.residual_hz, a.t1_C, a.t2_C) < std::tie(b.residual_hz, b.t1_C, b.t2_C);
  });
  return out;
}

}  // namespace cavspdc
