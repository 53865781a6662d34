#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavspdc/biphoton_correlation.hpp"
#include "cavspdc/cavity_model.hpp"
#include "cavspdc/detection_sim.hpp"
#include "cavspdc/error.hpp"
#include "cavspdc/phase_matching.hpp"

namespace cavspdc {

// Sectioned key = value text. '#' starts a comment; keys before the first
// section header are top level. Every key is consumed by the loader or the
// load fails.

struct CrystalSection {
  QpmCrystal crystal;
  double pump_nm = 780.0;
  double signal_nm = 1560.0;
  double idler_nm = 1560.0;
  double tuning_lo_C = 0.0;
  double tuning_hi_C = 50.0;
  int tuning_samples = 501;
  double bracket_lo_C = 10.0;
  double bracket_hi_C = 40.0;
};

struct ResonanceSection {
  std::string crystal1;
  std::string crystal2;
  TripleResonanceSetup setup;  // crystal models and passive path filled at load
  TemperatureGrid t1;
  TemperatureGrid t2;
};

struct CavitySection {
  CavityGeometry geometry;
  std::string pump_label;
  std::string down_label;
  double pump_nm = 780.0;
  double down_nm = 1560.0;
  double bandwidth_hz = 8e6;
  double leaked_power_mW = 0.0;
  double differential_dndT = 0.0;  // 1/K
  double detuning_length_mm = 10.0;
  std::optional<ResonanceSection> resonance;
};

struct CombSection {
  CombSpec spec;
  double half_span_s = 150e-9;
  double step_s = 0.05e-9;
  double sigma_s = 1.4e-9;
  G2Options options{ModePairing::paired, Sampling::cell_average, 0};
};

enum class EstimatorKind { cavity, single_pass };

struct SourceSection {
  SourceConfig source;
  std::optional<double> detected_rate_per_s_per_MHz_per_mW;
  std::optional<double> detected_rate_per_s_per_mW;
};

struct LossesSection {
  LossBudget budget;
  ArmAssignment arms;
  EstimatorKind estimator = EstimatorKind::cavity;
};

struct ScanSection {
  double offset_start_ns = -100.0;  // relative to the balanced delay
  double offset_stop_ns = 100.0;
  double offset_step_ns = 1.0;
  double far_offset_ns = 200.0;
  double accumulation_s = 300.0;
  ScanMethod method = ScanMethod::gate_sampled;

  std::vector<double> offsets() const;  // scan grid plus the far point, ascending
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::optional<IndexModel> index_model;
  std::optional<CrystalSection> crystal;
  std::optional<CavitySection> cavity;
  std::optional<CombSection> comb;
  std::optional<SourceSection> source;
  std::optional<DetectionChainConfig> detectors;
  std::optional<LossesSection> losses;
  std::optional<ScanSection> scan;
};

/// Throws Error{config} on syntax, unknown sections or keys, bad values and
/// missing required keys.
RunConfig parse_run_config(std::string_view text, const std::string& origin = "<config>");
/// As parse_run_config; Error{io} if the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);

/// Returns the section or throws Error{config} naming it.
template <class T>
const T& need(const std::optional<T>& section, std::string_view name) {
  if (!section) {
    throw Error(ErrorKind::config, "config lacks required section [" + std::string(name) + "]");
  }
  return *section;
}

}  // namespace cavspdc
