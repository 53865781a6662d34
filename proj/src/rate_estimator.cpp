#include "cavspdc/rate_estimator.hpp"

#include <cmath>

#include "cavspdc/error.hpp"

namespace cavspdc {

SpectralBrightness spectral_brightness(PairRatePerPower rate, double bandwidth_MHz) {
  require(bandwidth_MHz > 0.0, ErrorKind::argument, "bandwidth must be positive");
  return SpectralBrightness(rate.value() / bandwidth_MHz);
}

namespace detail {

double correction_factor(double detected, const std::vector<FactorTerm>& terms) {
  require(detected >= 0.0, ErrorKind::argument, "detected rate must be >= 0");
  double c = 1.0;
  for (const auto& t : terms) {
    require(t.value > 0.0 && t.value <= 1.0, ErrorKind::argument,
            "factor " + t.name + " must be in (0, 1]");
    for (int k = 0; k < t.exponent; ++k) c *= t.value;
  }
  return c;
}

}  // namespace detail

const std::vector<BrightnessRecord>& opo_brightness_records() {
  static const std::vector<BrightnessRecord> records{
      {"Wang (860 nm)", 860.0, 18.0, 0.12, false, false, true},
      {"Kuklewicz", 795.0, 22.0, 0.7, false, true, true},
      {"Bao", 780.0, 9.6, 6.0, true, true, true},
      {"Scholz", 893.4, 2.7, 330.0, true, true, false},
      {"Wang (780 nm)", 780.0, 20.0, 5.4, true, true, false},
      {"Wolfgramm", 795.0, 7.0, 70.0, false, true, true},
      {"Pomarico", 1560.0, 117.0, 17.0, true, true, true},
      {"cavspdc", 1560.0, 8.0, 134.0, true, true, false},
  };
  return records;
}

}  // namespace cavspdc
