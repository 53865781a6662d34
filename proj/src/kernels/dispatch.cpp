#include <atomic>

#include "cavspdc/error.hpp"
#include "cavspdc/kernels.hpp"

namespace cavspdc::kernels {

namespace {
// -1: automatic, otherwise static_cast<int>(Isa)
std::atomic<int> g_override{-1};
}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "scalar";
}

std::optional<Isa> parse_isa(std::string_view name) noexcept {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  return std::nullopt;
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(CAVSPDC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa detected_isa() noexcept {
  static const Isa best = isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
  return best;
}

Isa active_isa() noexcept {
  const int forced = g_override.load(std::memory_order_relaxed);
  return forced < 0 ? detected_isa() : static_cast<Isa>(forced);
}

void set_isa(std::optional<Isa> isa) {
  if (!isa) {
    g_override.store(-1, std::memory_order_relaxed);
    return;
  }
  require(isa_available(*isa), ErrorKind::argument,
          "kernel variant '" + std::string(to_string(*isa)) + "' is not available on this CPU/build");
  g_override.store(static_cast<int>(*isa), std::memory_order_relaxed);
}

void comb_phasor_sum(std::span<const std::complex<double>> weights, int first_index,
                     std::span<const double> theta, std::span<std::complex<double>> out) {
#ifdef CAVSPDC_HAVE_AVX2
  if (active_isa() == Isa::avx2) return avx2::comb_phasor_sum(weights, first_index, theta, out);
#endif
  scalar::comb_phasor_sum(weights, first_index, theta, out);
}

void correlate_centered(std::span<const double> input, std::span<const double> taps,
                        std::span<double> out) {
#ifdef CAVSPDC_HAVE_AVX2
  if (active_isa() == Isa::avx2) return avx2::correlate_centered(input, taps, out);
#endif
  scalar::correlate_centered(input, taps, out);
}

}  // namespace cavspdc::kernels
