#include <vector>

#include "cavspdc/error.hpp"
#include "cavspdc/kernels.hpp"

namespace cavspdc::kernels::scalar {

void correlate_centered(std::span<const double> input, std::span<const double> taps,
                        std::span<double> out) {
  require(taps.size() % 2 == 1, ErrorKind::argument, "correlate_centered: tap count must be odd");
  require(out.size() == input.size(), ErrorKind::argument,
          "correlate_centered: input and out differ in length");
  const std::size_t half = (taps.size() - 1) / 2;
  std::vector<double> padded(input.size() + 2 * half, 0.0);
  std::copy(input.begin(), input.end(), padded.begin() + static_cast<std::ptrdiff_t>(half));

  for (std::size_t j = 0; j < out.size(); ++j) {
    double acc = 0.0;
    const double* x = padded.data() + j;
    for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * x[k];
    out[j] = acc;
  }
}

}  // namespace cavspdc::kernels::scalar
