#pragma once

#include <array>
#include <string_view>
#include <vector>

namespace cavspdc {

enum class Axis { y, z };

std::string_view to_string(Axis axis) noexcept;
/// Throws Error{lookup} for anything but "y" or "z".
Axis parse_axis(std::string_view name);

/// Dispersion of one crystal axis, wavelength l in micrometres:
///   n_ref(l)^2 = a + b1 / (l^2 - c1) + b2 / (l^2 - c2) - d * l^2
///   dn/dT(l)   = dndt[0] + dndt[1] / l + dndt[2] / l^2 + dndt[3] / l^3   [1/K]
struct AxisDispersion {
  double a = 1.0;
  double b1 = 0.0;
  double c1 = 0.0;
  double b2 = 0.0;
  double c2 = 0.0;
  double d = 0.0;
  std::array<double, 4> dndt{};

  static AxisDispersion constant(double n, double dn_dT = 0.0);
};

struct IndexModel {
  AxisDispersion y;
  AxisDispersion z;
  double t_ref_C = 22.0;
  double lambda_min_nm = 400.0;
  double lambda_max_nm = 2000.0;
  double t_min_C = 0.0;
  double t_max_C = 100.0;

  const AxisDispersion& axis(Axis a) const noexcept { return a == Axis::y ? y : z; }
};

/// Checks ranges, Sellmeier poles and n > 1 across the validity box.
void validate(const IndexModel& model);

double refractive_index(const IndexModel& model, Axis axis, double lambda_nm, double T_C);
double thermo_optic_slope(const IndexModel& model, Axis axis, double lambda_nm);

struct QpmCrystal {
  double length_mm = 10.0;
  double period_um = 46.2;
  Axis pump = Axis::y;
  Axis signal = Axis::y;
  Axis idler = Axis::z;
  // Sign of the grating vector in the mismatch; -1 flips it for crystals
  // whose bracket is negative at the operating point.
  int grating_order = 1;
  IndexModel model;
};

void validate(const QpmCrystal& crystal);

/// Delta k in rad/m. Throws Error{invariant} when 1/lp != 1/ls + 1/li within
/// 1e-9 nm^-1.
double qpm_mismatch(const QpmCrystal& crystal, double lambda_p_nm, double lambda_s_nm,
                    double lambda_i_nm, double T_C);

struct TuningPoint {
  double temperature_C;
  double normalized_power;
};

/// sinc^2(dk L / 2) on an evenly spaced temperature grid, divided by its
/// sampled maximum.
std::vector<TuningPoint> tuning_curve(const QpmCrystal& crystal, double lambda_p_nm,
                                      double lambda_s_nm, double lambda_i_nm, double T_lo_C,
                                      double T_hi_C, int samples);

/// Bisection on the sign of dk at degeneracy (ls = li = 2 lp) until
/// |dk| <= 1e-3 rad/m.
double degenerate_temperature(const QpmCrystal& crystal, double lambda_p_nm, double T_lo_C,
                              double T_hi_C);

inline constexpr double kDegenerateTolerance = 1e-3;  // rad/m

}  // namespace cavspdc
