#include <immintrin.h>

#include <cmath>
#include <vector>

#include "cavspdc/error.hpp"
#include "cavspdc/kernels.hpp"

namespace cavspdc::kernels::avx2 {

void comb_phasor_sum(std::span<const std::complex<double>> weights, int first_index,
                     std::span<const double> theta, std::span<std::complex<double>> out) {
  require(theta.size() == out.size(), ErrorKind::argument,
          "comb_phasor_sum: theta and out differ in length");
  constexpr std::size_t lanes = 4;
  const std::size_t n = theta.size();
  const std::size_t vec_n = n - n % lanes;
  const double start = static_cast<double>(first_index);

  std::vector<double> wre(weights.size());
  std::vector<double> wim(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    wre[k] = weights[k].real();
    wim[k] = weights[k].imag();
  }

  alignas(32) double c[lanes], s[lanes], p0r[lanes], p0i[lanes];
  alignas(32) double res_r[lanes], res_i[lanes];
  for (std::size_t j = 0; j < vec_n; j += lanes) {
    // sin/cos stay scalar (libm) so lanes match the reference bit for bit.
    for (std::size_t l = 0; l < lanes; ++l) {
      const double t = theta[j + l];
      c[l] = std::cos(t);
      s[l] = std::sin(t);
      const double phase0 = start * t;
      p0r[l] = std::cos(phase0);
      p0i[l] = std::sin(phase0);
    }
    const __m256d vc = _mm256_load_pd(c);
    const __m256d vs = _mm256_load_pd(s);
    __m256d pr = _mm256_load_pd(p0r);
    __m256d pi = _mm256_load_pd(p0i);
    __m256d ar = _mm256_setzero_pd();
    __m256d ai = _mm256_setzero_pd();
    for (std::size_t k = 0; k < wre.size(); ++k) {
      const __m256d wr = _mm256_set1_pd(wre[k]);
      const __m256d wi = _mm256_set1_pd(wim[k]);
      ar = _mm256_add_pd(ar, _mm256_sub_pd(_mm256_mul_pd(wr, pr), _mm256_mul_pd(wi, pi)));
      ai = _mm256_add_pd(ai, _mm256_add_pd(_mm256_mul_pd(wr, pi), _mm256_mul_pd(wi, pr)));
      const __m256d nr = _mm256_sub_pd(_mm256_mul_pd(pr, vc), _mm256_mul_pd(pi, vs));
      const __m256d ni = _mm256_add_pd(_mm256_mul_pd(pr, vs), _mm256_mul_pd(pi, vc));
      pr = nr;
      pi = ni;
    }
    _mm256_store_pd(res_r, ar);
    _mm256_store_pd(res_i, ai);
    for (std::size_t l = 0; l < lanes; ++l) out[j + l] = {res_r[l], res_i[l]};
  }

  if (vec_n < n) {
    scalar::comb_phasor_sum(weights, first_index, theta.subspan(vec_n), out.subspan(vec_n));
  }
}

}  // namespace cavspdc::kernels::avx2
