#include <cmath>

#include "cavspdc/error.hpp"
#include "cavspdc/kernels.hpp"

namespace cavspdc::kernels::scalar {

void comb_phasor_sum(std::span<const std::complex<double>> weights, int first_index,
                     std::span<const double> theta, std::span<std::complex<double>> out) {
  require(theta.size() == out.size(), ErrorKind::argument,
          "comb_phasor_sum: theta and out differ in length");
  const double start = static_cast<double>(first_index);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double c = std::cos(theta[j]);
    const double s = std::sin(theta[j]);
    const double phase0 = start * theta[j];
    double pr = std::cos(phase0);
    double pi = std::sin(phase0);
    double ar = 0.0;
    double ai = 0.0;
    for (const auto& w : weights) {
      const double wr = w.real();
      const double wi = w.imag();
      ar += wr * pr - wi * pi;
      ai += wr * pi + wi * pr;
      const double nr = pr * c - pi * s;
      const double ni = pr * s + pi * c;
      pr = nr;
      pi = ni;
    }
    out[j] = {ar, ai};
  }
}

}  // namespace cavspdc::kernels::scalar
