#include <immintrin.h>

#include <vector>

#include "cavspdc/error.hpp"
#include "cavspdc/kernels.hpp"

namespace cavspdc::kernels::avx2 {

void correlate_centered(std::span<const double> input, std::span<const double> taps,
                        std::span<double> out) {
  require(taps.size() % 2 == 1, ErrorKind::argument, "correlate_centered: tap count must be odd");
  require(out.size() == input.size(), ErrorKind::argument,
          "correlate_centered: input and out differ in length");
  constexpr std::size_t lanes = 4;
  const std::size_t half = (taps.size() - 1) / 2;
  std::vector<double> padded(input.size() + 2 * half + lanes, 0.0);
  std::copy(input.begin(), input.end(), padded.begin() + static_cast<std::ptrdiff_t>(half));

  const std::size_t n = out.size();
  const std::size_t vec_n = n - n % lanes;
  for (std::size_t j = 0; j < vec_n; j += lanes) {
    __m256d acc = _mm256_setzero_pd();
    const double* x = padded.data() + j;
    for (std::size_t k = 0; k < taps.size(); ++k) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(taps[k]), _mm256_loadu_pd(x + k)));
    }
    _mm256_storeu_pd(out.data() + j, acc);
  }
  for (std::size_t j = vec_n; j < n; ++j) {
    double acc = 0.0;
    const double* x = padded.data() + j;
    for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * x[k];
    out[j] = acc;
  }
}

}  // namespace cavspdc::kernels::avx2
