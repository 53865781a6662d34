#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cavspdc {

struct PerSecondPerMilliwatt {
  static constexpr std::string_view symbol = "s^-1 mW^-1";
};
struct PerSecondPerMegahertzPerMilliwatt {
  static constexpr std::string_view symbol = "s^-1 MHz^-1 mW^-1";
};

/// Pair rate tagged with its unit; rates with different tags do not mix.
template <class Unit>
class PairRate {
 public:
  using unit = Unit;

  constexpr PairRate() = default;
  constexpr explicit PairRate(double v) : value_(v) {}

  constexpr double value() const { return value_; }
  static constexpr std::string_view symbol() { return Unit::symbol; }

  constexpr PairRate operator+(PairRate o) const { return PairRate(value_ + o.value_); }
  constexpr PairRate operator-(PairRate o) const { return PairRate(value_ - o.value_); }
  constexpr PairRate operator*(double k) const { return PairRate(value_ * k); }
  constexpr PairRate operator/(double k) const { return PairRate(value_ / k); }
  constexpr double operator/(PairRate o) const { return value_ / o.value_; }
  constexpr auto operator<=>(const PairRate&) const = default;

 private:
  double value_ = 0.0;
};

using PairRatePerPower = PairRate<PerSecondPerMilliwatt>;
using SpectralBrightness = PairRate<PerSecondPerMegahertzPerMilliwatt>;

SpectralBrightness spectral_brightness(PairRatePerPower rate, double bandwidth_MHz);

struct FactorTerm {
  std::string name;
  double value;
  int exponent;
};

template <class Unit>
struct RateEstimate {
  PairRate<Unit> detected;
  PairRate<Unit> estimate;
  double correction;                // product of value^exponent
  std::vector<FactorTerm> breakdown;
};

namespace detail {
/// Validates every factor in (0, 1] and returns the product of powers.
double correction_factor(double detected, const std::vector<FactorTerm>& terms);
}

template <class Unit>
RateEstimate<Unit> estimate_from_terms(PairRate<Unit> detected, std::vector<FactorTerm> terms) {
  const double c = detail::correction_factor(detected.value(), terms);
  return {detected, PairRate<Unit>(detected.value() / c), c, std::move(terms)};
}

/// R / (d a1 a2 t^2 eta^2)
template <class Unit>
RateEstimate<Unit> estimate_rate_single_pass(PairRate<Unit> detected, double d, double alpha1,
                                             double alpha2, double t, double eta) {
  return estimate_from_terms(detected, {{"d", d, 1},
                                        {"alpha1", alpha1, 1},
                                        {"alpha2", alpha2, 1},
                                        {"t", t, 2},
                                        {"eta", eta, 2}});
}

/// R / (d a^2 a1 a2 t1^2 t2^2 eta^2)
template <class Unit>
RateEstimate<Unit> estimate_rate_cavity(PairRate<Unit> detected, double d, double alpha,
                                        double alpha1, double alpha2, double t1, double t2,
                                        double eta) {
  return estimate_from_terms(detected, {{"d", d, 1},
                                        {"alpha", alpha, 2},
                                        {"alpha1", alpha1, 1},
                                        {"alpha2", alpha2, 1},
                                        {"t1", t1, 2},
                                        {"t2", t2, 2},
                                        {"eta", eta, 2}});
}

struct BrightnessRecord {
  std::string_view source;
  double wavelength_nm;
  double bandwidth_MHz;
  double brightness;  // s^-1 MHz^-1 mW^-1, inferred
  bool single_mode;
  bool fiber_coupled;
  bool entangled;
};

/// Published OPO pair-source comparison; "cavspdc" is the modelled source.
const std::vector<BrightnessRecord>& opo_brightness_records();

}  // namespace cavspdc
