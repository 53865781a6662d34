#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cavspdc/cavity_model.hpp"

namespace cavspdc {

/// tau_k = (first + k) * step, k = 0 .. count-1. Integer offsets keep
/// symmetric grids exactly symmetric.
struct TauGrid {
  std::int64_t first = 0;
  double step_s = 0.05e-9;
  std::size_t count = 0;

  double at(std::size_t k) const { return static_cast<double>(first + static_cast<std::int64_t>(k)) * step_s; }
  static TauGrid symmetric(double half_span_s, double step_s);
};

struct CorrelationTrace {
  TauGrid grid;
  std::vector<double> values;  // peak-normalized
  CombSpec spec;
  double sigma_s = 0.0;        // 0 for unconvolved traces

  double tau(std::size_t k) const { return grid.at(k); }
};

enum class ModePairing {
  paired,         // m_i = -m_s
  unconstrained,  // independent double sum
};

enum class Sampling {
  point,         // |A(tau)|^2 at the grid point
  cell_average,  // mean of |A|^2 over [tau - step/2, tau + step/2], closed form
};

struct G2Options {
  ModePairing pairing = ModePairing::paired;
  Sampling sampling = Sampling::point;
  unsigned threads = 0;
};

/// Multi-mode signal-idler cross-correlation. With x = tau - tau0/2:
///   A(x) = sum_m w_m sinc_s(m) exp(-2 pi Gs(m) x)        x >= 0
///   A(x) = sum_m w_m sinc_i(-m) exp(+2 pi Gi(-m) x)      x <  0
/// Gs,i(m) = gamma_s,i/2 + i m FSR, w_m = sqrt(gs gi) / (Gs(m) + Gi(-m)) and
/// sinc_j(m) = sinh(pi tau0 Gj(m)) / (pi tau0 Gj(m)) (1 at tau0 = 0).
CorrelationTrace g2_multimode(const CombSpec& spec, const TauGrid& grid,
                              const G2Options& options = {});

double g2_single_mode(double gamma_hz, double tau_s);
double detector_response(double sigma_s, double t_s);

/// Discrete convolution with exp(-t^2/sigma^2) taps truncated at 8 sigma,
/// then peak-normalized. Requires step <= sigma/4; sigma <= step/8 is below
/// the grid and returns the input unchanged.
CorrelationTrace convolve_response(const CorrelationTrace& trace, double sigma_s);

/// Convolution taps used by convolve_response, ascending in time.
std::vector<double> response_taps(double sigma_s, double step_s);

/// Width between the half-maximum crossings nearest the global peak, with
/// linear interpolation between samples.
double fwhm(std::span<const double> values, double step);
double fwhm(const CorrelationTrace& trace);

double coherence_time(double gamma_hz);

}  // namespace cavspdc
