#include "cavspdc/biphoton_correlation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "cavspdc/error.hpp"
#include "cavspdc/kernels.hpp"
#include "cavspdc/parallel.hpp"

namespace cavspdc {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

cplx sinc_imag(double tau0, cplx gamma) {
  if (tau0 == 0.0) return 1.0;
  const cplx z = kPi * tau0 * gamma;
  return std::sinh(z) / z;
}

// Harmonic coefficients of the two branches; index k <-> m = k - (M-1)/2.
struct Branches {
  std::vector<cplx> signal;
  std::vector<cplx> idler;
};

Branches branch_coefficients(const CombSpec& s, ModePairing pairing) {
  const int M = s.modes;
  const int half = (M - 1) / 2;
  const double root = std::sqrt(s.gamma_s_hz * s.gamma_i_hz);
  auto gs = [&](int m) { return cplx(s.gamma_s_hz / 2.0, m * s.fsr_hz); };
  auto gi = [&](int m) { return cplx(s.gamma_i_hz / 2.0, m * s.fsr_hz); };

  Branches b{std::vector<cplx>(M), std::vector<cplx>(M)};
  for (int k = 0; k < M; ++k) {
    const int m = k - half;
    cplx ws;
    cplx wi;
    if (pairing == ModePairing::paired) {
      ws = root / (gs(m) + gi(-m));
      wi = ws;
    } else {
      for (int j = -half; j <= half; ++j) {
        ws += root / (gs(m) + gi(j));
        wi += root / (gs(j) + gi(-m));
      }
    }
    b.signal[k] = ws * sinc_imag(s.tau0_s, gs(m));
    b.idler[k] = wi * sinc_imag(s.tau0_s, gi(-m));
  }
  return b;
}

// c_p = sum_n a_{n+p} conj(a_n), p = -(M-1) .. M-1
std::vector<cplx> autocorrelate(const std::vector<cplx>& a) {
  const int M = static_cast<int>(a.size());
  std::vector<cplx> c(2 * M - 1);
  for (int p = -(M - 1); p <= M - 1; ++p) {
    cplx acc;
    for (int n = std::max(0, -p); n < std::min(M, M - p); ++n) acc += a[n + p] * std::conj(a[n]);
    c[p + M - 1] = acc;
  }
  return c;
}

// sum_p c_p (1 - exp(-z_p w)) / z_p with z_p = kappa + i sign 2 pi p fsr
std::vector<cplx> cell_weights(const std::vector<cplx>& c, double kappa, double sign, double fsr,
                               double width) {
  const int P = static_cast<int>(c.size());
  const int half = (P - 1) / 2;
  std::vector<cplx> u(P);
  for (int k = 0; k < P; ++k) {
    const cplx z(kappa, sign * 2.0 * kPi * (k - half) * fsr);
    u[k] = c[k] * (1.0 - std::exp(-z * width)) / z;
  }
  return u;
}

double cell_integral_direct(const std::vector<cplx>& u) {
  double acc = 0.0;
  for (const auto& v : u) acc += v.real();
  return acc;
}

void normalize(std::vector<double>& v) {
  const double peak = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  require(std::isfinite(peak) && peak > 0.0, ErrorKind::invariant,
          "correlation trace has no positive finite maximum");
  for (auto& x : v) x /= peak;
}

std::string ns(double seconds) {
  std::ostringstream os;
  os.precision(6);
  os << seconds * 1e9 << " ns";
  return os.str();
}

}  // namespace

TauGrid TauGrid::symmetric(double half_span_s, double step_s) {
  require(step_s > 0.0 && half_span_s >= 0.0, ErrorKind::argument,
          "tau grid: step must be positive and span non-negative");
  const auto n = static_cast<std::int64_t>(std::floor(half_span_s / step_s + 1e-9));
  return {-n, step_s, static_cast<std::size_t>(2 * n + 1)};
}

CorrelationTrace g2_multimode(const CombSpec& spec, const TauGrid& grid, const G2Options& opt) {
  validate(spec);
  require(grid.count > 0, ErrorKind::argument, "tau grid is empty");
  require(grid.step_s > 0.0, ErrorKind::argument, "tau grid step must be positive");

  const Branches br = branch_coefficients(spec, opt.pairing);
  const int M = spec.modes;
  const double fsr = spec.fsr_hz;
  const double x_shift = spec.tau0_s / 2.0;
  const double dt = grid.step_s;
  std::vector<double> values(grid.count);

  if (opt.sampling == Sampling::point) {
    const int m0 = -(M - 1) / 2;
    parallel_chunks(grid.count, opt.threads, [&](std::size_t begin, std::size_t end) {
      std::vector<double> th_s, th_i;
      std::vector<std::size_t> idx_s, idx_i;
      for (std::size_t k = begin; k < end; ++k) {
        const double x = grid.at(k) - x_shift;
        (x >= 0.0 ? th_s : th_i).push_back(-2.0 * kPi * fsr * x);
        (x >= 0.0 ? idx_s : idx_i).push_back(k);
      }
      std::vector<cplx> sum(std::max(th_s.size(), th_i.size()));
      kernels::comb_phasor_sum(br.signal, m0, th_s, std::span(sum).first(th_s.size()));
      for (std::size_t j = 0; j < idx_s.size(); ++j) {
        const double x = grid.at(idx_s[j]) - x_shift;
        values[idx_s[j]] = std::exp(-2.0 * kPi * spec.gamma_s_hz * x) * std::norm(sum[j]);
      }
      kernels::comb_phasor_sum(br.idler, m0, th_i, std::span(sum).first(th_i.size()));
      for (std::size_t j = 0; j < idx_i.size(); ++j) {
        const double x = grid.at(idx_i[j]) - x_shift;
        values[idx_i[j]] = std::exp(2.0 * kPi * spec.gamma_i_hz * x) * std::norm(sum[j]);
      }
    });
  } else {
    const double kappa_s = 2.0 * kPi * spec.gamma_s_hz;
    const double kappa_i = 2.0 * kPi * spec.gamma_i_hz;
    const auto c_s = autocorrelate(br.signal);
    const auto c_i = autocorrelate(br.idler);
    const auto u_s = cell_weights(c_s, kappa_s, +1.0, fsr, dt);
    const auto u_i = cell_weights(c_i, kappa_i, -1.0, fsr, dt);
    const int p0 = -(M - 1);
    parallel_chunks(grid.count, opt.threads, [&](std::size_t begin, std::size_t end) {
      std::vector<double> th_s, th_i;
      std::vector<std::size_t> idx_s, idx_i;
      for (std::size_t k = begin; k < end; ++k) {
        const double xc = grid.at(k) - x_shift;
        const double x1 = xc - dt / 2.0;
        const double x2 = xc + dt / 2.0;
        if (x1 >= 0.0) {
          th_s.push_back(-2.0 * kPi * fsr * x1);
          idx_s.push_back(k);
        } else if (x2 <= 0.0) {
          th_i.push_back(2.0 * kPi * fsr * (-x2));
          idx_i.push_back(k);
        } else {
          // cell straddles the branch point: integrate each side from zero
          const double sig = cell_integral_direct(cell_weights(c_s, kappa_s, +1.0, fsr, x2));
          const double idl = cell_integral_direct(cell_weights(c_i, kappa_i, -1.0, fsr, -x1));
          values[k] = (sig + idl) / dt;
        }
      }
      std::vector<cplx> sum(std::max(th_s.size(), th_i.size()));
      kernels::comb_phasor_sum(u_s, p0, th_s, std::span(sum).first(th_s.size()));
      for (std::size_t j = 0; j < idx_s.size(); ++j) {
        const double x1 = grid.at(idx_s[j]) - x_shift - dt / 2.0;
        values[idx_s[j]] = std::exp(-kappa_s * x1) * sum[j].real() / dt;
      }
      kernels::comb_phasor_sum(u_i, p0, th_i, std::span(sum).first(th_i.size()));
      for (std::size_t j = 0; j < idx_i.size(); ++j) {
        const double y1 = -(grid.at(idx_i[j]) - x_shift + dt / 2.0);
        values[idx_i[j]] = std::exp(-kappa_i * y1) * sum[j].real() / dt;
      }
    });
    // the real part of a non-negative integral can dip a few ulp below zero
    for (auto& v : values) v = std::max(v, 0.0);
  }

  normalize(values);
  return {grid, std::move(values), spec, 0.0};
}

double g2_single_mode(double gamma_hz, double tau_s) {
  require(gamma_hz > 0.0, ErrorKind::argument, "gamma must be positive");
  return std::exp(-2.0 * kPi * gamma_hz * std::abs(tau_s));
}

double detector_response(double sigma_s, double t_s) {
  require(sigma_s > 0.0, ErrorKind::argument, "sigma must be positive");
  const double r = t_s / sigma_s;
  return std::exp(-r * r);
}

std::vector<double> response_taps(double sigma_s, double step_s) {
  require(sigma_s > 0.0 && step_s > 0.0, ErrorKind::argument,
          "response taps: sigma and step must be positive");
  const auto half = static_cast<std::int64_t>(std::floor(8.0 * sigma_s / step_s));
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  for (std::int64_t k = -half; k <= half; ++k) {
    taps[static_cast<std::size_t>(k + half)] = detector_response(sigma_s, k * step_s);
  }
  return taps;
}

CorrelationTrace convolve_response(const CorrelationTrace& trace, double sigma_s) {
  require(sigma_s > 0.0, ErrorKind::argument, "sigma must be positive");
  const double dt = trace.grid.step_s;
  CorrelationTrace out = trace;
  out.sigma_s = sigma_s;
  if (sigma_s <= dt / 8.0) return out;
  if (dt > sigma_s / 4.0) {
    fail(ErrorKind::resolution, "grid step " + ns(dt) + " too coarse for sigma " + ns(sigma_s) +
                                    "; need step <= " + ns(sigma_s / 4.0));
  }
  const auto taps = response_taps(sigma_s, dt);
  kernels::correlate_centered(trace.values, taps, out.values);
  normalize(out.values);
  return out;
}

double fwhm(std::span<const double> v, double step) {
  require(v.size() >= 3, ErrorKind::shape, "fwhm: trace too short");
  const auto peak_it = std::max_element(v.begin(), v.end());
  const auto i = static_cast<std::size_t>(peak_it - v.begin());
  const double peak = *peak_it;
  require(peak > 0.0, ErrorKind::shape, "fwhm: trace has no positive peak");
  require(i > 0 && i + 1 < v.size(), ErrorKind::shape, "fwhm: peak sits on the grid boundary");
  const double half = peak / 2.0;

  std::size_t r = i + 1;
  while (r < v.size() && !(v[r] < half)) ++r;
  require(r < v.size(), ErrorKind::shape, "fwhm: half maximum never crossed right of the peak");
  std::size_t l = i;
  while (l > 0 && !(v[l - 1] < half)) --l;
  require(l > 0, ErrorKind::shape, "fwhm: half maximum never crossed left of the peak");
  --l;

  const double right = (r - 1) + (v[r - 1] - half) / (v[r - 1] - v[r]);
  const double left = (l + 1) - (v[l + 1] - half) / (v[l + 1] - v[l]);
  return (right - left) * step;
}

double fwhm(const CorrelationTrace& trace) { return fwhm(trace.values, trace.grid.step_s); }

double coherence_time(double gamma_hz) {
  require(gamma_hz > 0.0, ErrorKind::argument, "gamma must be positive");
  return 1.39 / (2.0 * kPi * gamma_hz);
}

}  // namespace cavspdc
