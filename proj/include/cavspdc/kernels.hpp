#pragma once

// Data-parallel inner loops used by the correlation and convolution code.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2 variant. Variants vectorize across output samples and
// perform the same floating-point operations in the same order as the scalar
// reference, so results are bit-identical whichever variant runs. The build
// disables FMA contraction to keep that true.

#include <complex>
#include <optional>
#include <span>
#include <string_view>

namespace cavspdc::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa) noexcept;
std::optional<Isa> parse_isa(std::string_view name) noexcept;

/// Best variant the running CPU supports.
Isa detected_isa() noexcept;

/// Variant used by the dispatching entry points.
Isa active_isa() noexcept;

/// Force a variant (nullopt restores automatic selection). Throws
/// Error{argument} if the CPU or the build lacks the requested variant.
void set_isa(std::optional<Isa> isa);

bool isa_available(Isa isa) noexcept;

/// out[j] = sum_{k=0}^{n-1} weights[k] * exp(i * (first_index + k) * theta[j])
///
/// Evaluated with a unit-phasor recurrence per sample; theta.size() must
/// equal out.size().
void comb_phasor_sum(std::span<const std::complex<double>> weights, int first_index,
                     std::span<const double> theta, std::span<std::complex<double>> out);

/// out[j] = sum_k taps[k] * input[j + k - (taps.size() - 1) / 2], with zero
/// padding outside the input. taps.size() must be odd; out.size() must equal
/// input.size().
void correlate_centered(std::span<const double> input, std::span<const double> taps,
                        std::span<double> out);

namespace scalar {
void comb_phasor_sum(std::span<const std::complex<double>> weights, int first_index,
                     std::span<const double> theta, std::span<std::complex<double>> out);
void correlate_centered(std::span<const double> input, std::span<const double> taps,
                        std::span<double> out);
}  // namespace scalar

#ifdef CAVSPDC_HAVE_AVX2
namespace avx2 {
void comb_phasor_sum(std::span<const std::complex<double>> weights, int first_index,
                     std::span<const double> theta, std::span<std::complex<double>> out);
void correlate_centered(std::span<const double> input, std::span<const double> taps,
                        std::span<double> out);
}  // namespace avx2
#endif

}  // namespace cavspdc::kernels
