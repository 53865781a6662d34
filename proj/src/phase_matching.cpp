#include "cavspdc/phase_matching.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cavspdc/error.hpp"

namespace cavspdc {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double sellmeier_n(const AxisDispersion& c, double l_um) {
  const double l2 = l_um * l_um;
  const double n2 = c.a + c.b1 / (l2 - c.c1) + c.b2 / (l2 - c.c2) - c.d * l2;
  return std::sqrt(n2);
}

double slope(const AxisDispersion& c, double l_um) {
  const double inv = 1.0 / l_um;
  return c.dndt[0] + inv * (c.dndt[1] + inv * (c.dndt[2] + inv * c.dndt[3]));
}

void check_lambda(const IndexModel& m, double lambda_nm, const char* name) {
  if (!(lambda_nm >= m.lambda_min_nm && lambda_nm <= m.lambda_max_nm)) {
    fail(ErrorKind::range, std::string(name) + " = " + fmt(lambda_nm) + " nm outside [" +
                               fmt(m.lambda_min_nm) + ", " + fmt(m.lambda_max_nm) + "] nm");
  }
}

void check_temperature(const IndexModel& m, double T_C) {
  if (!(T_C >= m.t_min_C && T_C <= m.t_max_C)) {
    fail(ErrorKind::range, "temperature = " + fmt(T_C) + " C outside [" + fmt(m.t_min_C) + ", " +
                               fmt(m.t_max_C) + "] C");
  }
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace

std::string_view to_string(Axis axis) noexcept { return axis == Axis::y ? "y" : "z"; }

Axis parse_axis(std::string_view name) {
  if (name == "y") return Axis::y;
  if (name == "z") return Axis::z;
  fail(ErrorKind::lookup, "unknown crystal axis '" + std::string(name) + "' (expected y or z)");
}

AxisDispersion AxisDispersion::constant(double n, double dn_dT) {
  AxisDispersion c;
  c.a = n * n;
  c.dndt = {dn_dT, 0.0, 0.0, 0.0};
  return c;
}

void validate(const IndexModel& m) {
  require(m.lambda_min_nm > 0.0 && m.lambda_min_nm < m.lambda_max_nm, ErrorKind::argument,
          "index model: wavelength range must satisfy 0 < min < max");
  require(m.t_min_C < m.t_max_C, ErrorKind::argument,
          "index model: temperature range must satisfy min < max");
  const double l2_lo = std::pow(m.lambda_min_nm * 1e-3, 2);
  const double l2_hi = std::pow(m.lambda_max_nm * 1e-3, 2);
  for (Axis ax : {Axis::y, Axis::z}) {
    const auto& c = m.axis(ax);
    for (double pole : {c.c1, c.c2}) {
      require(!(pole >= l2_lo && pole <= l2_hi), ErrorKind::argument,
              "index model: Sellmeier pole of axis " + std::string(to_string(ax)) +
                  " lies inside the wavelength range");
    }
    constexpr int kSamples = 64;
    for (int i = 0; i <= kSamples; ++i) {
      const double l = m.lambda_min_nm + (m.lambda_max_nm - m.lambda_min_nm) * i / kSamples;
      for (double T : {m.t_min_C, m.t_max_C}) {
        const double n = refractive_index(m, ax, l, T);
        require(std::isfinite(n) && n > 1.0, ErrorKind::argument,
                "index model: n <= 1 on axis " + std::string(to_string(ax)) + " at " + fmt(l) +
                    " nm, " + fmt(T) + " C");
      }
    }
  }
}

double thermo_optic_slope(const IndexModel& model, Axis axis, double lambda_nm) {
  check_lambda(model, lambda_nm, "wavelength");
  return slope(model.axis(axis), lambda_nm * 1e-3);
}

double refractive_index(const IndexModel& model, Axis axis, double lambda_nm, double T_C) {
  check_lambda(model, lambda_nm, "wavelength");
  check_temperature(model, T_C);
  const auto& c = model.axis(axis);
  const double l_um = lambda_nm * 1e-3;
  return sellmeier_n(c, l_um) + slope(c, l_um) * (T_C - model.t_ref_C);
}

void validate(const QpmCrystal& crystal) {
  require(crystal.length_mm > 0.0, ErrorKind::argument, "crystal length must be positive");
  require(crystal.period_um > 0.0, ErrorKind::argument, "poling period must be positive");
  require(crystal.grating_order != 0, ErrorKind::argument, "grating order must be non-zero");
  validate(crystal.model);
}

double qpm_mismatch(const QpmCrystal& crystal, double lambda_p_nm, double lambda_s_nm,
                    double lambda_i_nm, double T_C) {
  const double energy = 1.0 / lambda_p_nm - 1.0 / lambda_s_nm - 1.0 / lambda_i_nm;
  require(std::abs(energy) <= 1e-9, ErrorKind::invariant,
          "energy conservation violated: 1/lp - 1/ls - 1/li = " + fmt(energy) + " nm^-1");
  const auto& m = crystal.model;
  const double np = refractive_index(m, crystal.pump, lambda_p_nm, T_C);
  const double ns = refractive_index(m, crystal.signal, lambda_s_nm, T_C);
  const double ni = refractive_index(m, crystal.idler, lambda_i_nm, T_C);
  const double grating = crystal.grating_order / (crystal.period_um * 1e3);
  const double per_nm = np / lambda_p_nm - ns / lambda_s_nm - ni / lambda_i_nm - grating;
  return 2.0 * std::numbers::pi * per_nm * 1e9;
}

std::vector<TuningPoint> tuning_curve(const QpmCrystal& crystal, double lambda_p_nm,
                                      double lambda_s_nm, double lambda_i_nm, double T_lo_C,
                                      double T_hi_C, int samples) {
  require(samples >= 2, ErrorKind::argument, "tuning curve needs at least 2 samples");
  require(T_lo_C < T_hi_C, ErrorKind::argument, "tuning curve: empty temperature range");
  const double half_length_m = crystal.length_mm * 1e-3 / 2.0;
  std::vector<TuningPoint> out(static_cast<std::size_t>(samples));
  double peak = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double T = T_lo_C + (T_hi_C - T_lo_C) * k / (samples - 1);
    const double dk = qpm_mismatch(crystal, lambda_p_nm, lambda_s_nm, lambda_i_nm, T);
    const double s = sinc(dk * half_length_m);
    out[k] = {T, s * s};
    peak = std::max(peak, s * s);
  }
  require(peak > 0.0, ErrorKind::shape, "tuning curve vanishes at every sample");
  for (auto& p : out) p.normalized_power /= peak;
  return out;
}

double degenerate_temperature(const QpmCrystal& crystal, double lambda_p_nm, double T_lo_C,
                              double T_hi_C) {
  require(T_lo_C < T_hi_C, ErrorKind::argument, "temperature bracket must satisfy lo < hi");
  const double ls = 2.0 * lambda_p_nm;
  auto dk = [&](double T) { return qpm_mismatch(crystal, lambda_p_nm, ls, ls, T); };
  double lo = T_lo_C;
  double hi = T_hi_C;
  double f_lo = dk(lo);
  const double f_hi = dk(hi);
  if (std::abs(f_lo) <= kDegenerateTolerance) return lo;
  if (std::abs(f_hi) <= kDegenerateTolerance) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0)) {
    fail(ErrorKind::root_not_bracketed, "delta k has the same sign at " + fmt(lo) + " C (" +
                                            fmt(f_lo) + ") and " + fmt(hi) + " C (" + fmt(f_hi) +
                                            ")");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double f_mid = dk(mid);
    if (std::abs(f_mid) <= kDegenerateTolerance || mid == lo || mid == hi) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

}  // namespace cavspdc
