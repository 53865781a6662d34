#include "cavspdc/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "cavspdc/biphoton_correlation.hpp"
#include "cavspdc/cavity_model.hpp"
#include "cavspdc/config.hpp"
#include "cavspdc/detection_sim.hpp"
#include "cavspdc/fit.hpp"
#include "cavspdc/kernels.hpp"
#include "cavspdc/output.hpp"
#include "cavspdc/phase_matching.hpp"
#include "cavspdc/rate_estimator.hpp"

namespace cavspdc::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string format = "csv";
  unsigned threads = 0;
  std::string kernels = "auto";
};

std::string_view category(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::io: return "io";
    default: return "precondition";
  }
}

void print_error(std::ostream& err, ErrorKind kind, const std::string& message) {
  Json j;
  j["error"] = category(kind);
  j["kind"] = to_string(kind);
  j["message"] = message;
  err << j.dump() << "\n";
}

class Emitter {
 public:
  Emitter(const Common& c, std::ostream& out) : common_(c), out_(out) {
    if (!c.out_dir.empty()) {
      std::error_code ec;
      fs::create_directories(c.out_dir, ec);
      if (ec) fail(ErrorKind::io, "cannot create output directory '" + c.out_dir + "': " + ec.message());
    }
  }

  void table(const std::string& stem, const Table& t, bool to_stdout) {
    const bool json = common_.format == "json";
    const std::string content = json ? dump(to_json(t)) : to_csv(t);
    emit(stem + (json ? ".json" : ".csv"), content, to_stdout);
  }

  void object(const std::string& stem, const Json& j, bool to_stdout) {
    emit(stem + ".json", dump(j), to_stdout);
  }

 private:
  void emit(const std::string& name, const std::string& content, bool to_stdout) {
    if (!common_.out_dir.empty()) write_file(fs::path(common_.out_dir) / name, content);
    if (to_stdout) out_ << content;
  }

  const Common& common_;
  std::ostream& out_;
};

RunConfig load(const Common& c) {
  if (c.config.empty()) fail(ErrorKind::config, "--config is required for this subcommand");
  return load_run_config(c.config);
}

std::uint64_t resolve_seed(const Common& c, const RunConfig& cfg, std::ostream& err) {
  if (c.seed_given) return c.seed;
  if (cfg.seed) return *cfg.seed;
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  Json j;
  j["info"] = "no seed given; drew one";
  j["seed"] = seed;
  err << j.dump() << "\n";
  return seed;
}

Json nullable(const std::function<double()>& f) {
  try {
    return f();
  } catch (const Error&) {
    return nullptr;
  }
}

int cmd_cavity(const Common& c, std::ostream& out) {
  const auto cfg = load(c);
  const auto& cav = need(cfg.cavity, "cavity");
  const double fsr_p = free_spectral_range(cav.geometry, cav.pump_label);
  const double fsr_d = free_spectral_range(cav.geometry, cav.down_label);
  const double f_p = finesse(fsr_p, cav.bandwidth_hz);
  const double f_d = finesse(fsr_d, cav.bandwidth_hz);
  Json j;
  j["fsr_pump_MHz"] = fsr_p * 1e-6;
  j["fsr_down_MHz"] = fsr_d * 1e-6;
  j["optical_path_pump_mm"] = optical_path_mm(cav.geometry, cav.pump_label);
  j["optical_path_down_mm"] = optical_path_mm(cav.geometry, cav.down_label);
  j["bandwidth_MHz"] = cav.bandwidth_hz * 1e-6;
  j["finesse"] = f_p;
  j["finesse_down"] = f_d;
  j["circulating_power_mW"] =
      circulating_power(cav.leaked_power_mW, cav.geometry.output_transmittance.at(cav.pump_label));
  j["resonance_tolerance_nm"] = resonance_length_tolerance(cav.down_nm, f_d);
  j["temperature_fwhm_K"] = nullable([&] {
    return temperature_detuning_fwhm(cav.down_nm, f_d, cav.detuning_length_mm, cav.differential_dndT);
  });
  Emitter(c, out).object("cavity", j, true);
  return 0;
}

int cmd_tuning(const Common& c, std::ostream& out) {
  const auto cfg = load(c);
  const auto& cr = need(cfg.crystal, "crystal");
  const auto curve = tuning_curve(cr.crystal, cr.pump_nm, cr.signal_nm, cr.idler_nm,
                                  cr.tuning_lo_C, cr.tuning_hi_C, cr.tuning_samples);
  Table t;
  t.columns = {"temperature_C", "normalized_power"};
  for (const auto& p : curve) t.rows.push_back({p.temperature_C, p.normalized_power});
  Emitter(c, out).table("tuning", t, true);
  return 0;
}

Table trace_table(const CorrelationTrace& tr) {
  const auto& s = tr.spec;
  Table t;
  t.comments.push_back("gamma_s_MHz=" + format_number(s.gamma_s_hz * 1e-6) +
                       " gamma_i_MHz=" + format_number(s.gamma_i_hz * 1e-6) +
                       " fsr_GHz=" + format_number(s.fsr_hz * 1e-9) +
                       " modes=" + std::to_string(s.modes) +
                       " tau0_ps=" + format_number(s.tau0_s * 1e12) +
                       " sigma_ns=" + format_number(tr.sigma_s * 1e9));
  t.columns = {"tau_ns", "value"};
  for (std::size_t k = 0; k < tr.values.size(); ++k) {
    t.rows.push_back({tr.tau(k) * 1e9, tr.values[k]});
  }
  return t;
}

int cmd_correlation(const Common& c, bool summary_only, std::ostream& out) {
  const auto cfg = load(c);
  const auto& comb = need(cfg.comb, "comb");
  G2Options opt = comb.options;
  opt.threads = c.threads;
  const auto raw = g2_multimode(comb.spec, TauGrid::symmetric(comb.half_span_s, comb.step_s), opt);
  const auto conv = convolve_response(raw, comb.sigma_s);

  Json j;
  j["fwhm_ns"] = fwhm(conv) * 1e9;
  j["raw_fwhm_ns"] = nullable([&] { return fwhm(raw) * 1e9; });
  j["single_mode_fwhm_ns"] = std::log(2.0) / (std::numbers::pi * comb.spec.gamma_s_hz) * 1e9;
  j["coherence_time_ns"] = coherence_time(comb.spec.gamma_s_hz) * 1e9;
  j["sigma_ns"] = comb.sigma_s * 1e9;
  j["modes"] = comb.spec.modes;
  j["samples"] = raw.values.size();
  j["step_ns"] = comb.step_s * 1e9;
  j["sampling"] = comb.options.sampling == Sampling::point ? "point" : "cell_average";
  j["pairing"] = comb.options.pairing == ModePairing::paired ? "paired" : "unconstrained";

  Emitter e(c, out);
  e.table("correlation_raw", trace_table(raw), false);
  e.table("correlation_convolved", trace_table(conv), !summary_only);
  e.object("correlation_summary", j, summary_only);
  return 0;
}

int cmd_simulate(const Common& c, std::ostream& out, std::ostream& err) {
  const auto cfg = load(c);
  SourceConfig source = need(cfg.source, "source").source;
  const auto& chain = need(cfg.detectors, "detectors");
  const auto& losses = need(cfg.losses, "losses");
  const auto& scan = need(cfg.scan, "scan");
  if (source.shape == OffsetShape::trace) {
    const auto& comb = need(cfg.comb, "comb");
    G2Options opt = comb.options;
    opt.threads = c.threads;
    source.trace = std::make_shared<CorrelationTrace>(
        g2_multimode(comb.spec, TauGrid::symmetric(comb.half_span_s, comb.step_s), opt));
  }
  const std::uint64_t seed = resolve_seed(c, cfg, err);
  const auto offsets = scan.offsets();
  std::vector<double> delays;
  for (double o : offsets) delays.push_back(balanced_delay_ns(chain) + o);
  const auto h = scan_coincidences(source, losses.budget, losses.arms, chain, delays,
                                   scan.accumulation_s, seed, {scan.method, c.threads});

  Table t;
  t.columns = {"delay_ns", "coincidences", "singles1", "singles2"};
  std::vector<double> y;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    t.rows.push_back({offsets[k], h.coincidences[k], h.singles1[k], h.singles2[k]});
    y.push_back(static_cast<double>(h.coincidences[k]));
  }
  const auto [lo, hi] = std::minmax_element(h.coincidences.begin(), h.coincidences.end());
  Json j;
  j["seed"] = seed;
  j["accumulation_s"] = h.accumulation_s;
  j["snr"] = nullable([&] { return snr(h); });
  j["fwhm_ns"] = nullable([&] {
    const auto r = fit(FitModel::exp_envelope, offsets, y);
    require(r.converged, ErrorKind::convergence, "envelope fit did not converge");
    return r.derived.at("fwhm");
  });
  j["max_count"] = *hi;
  j["min_count"] = *lo;

  Emitter e(c, out);
  e.table("histogram", t, false);
  e.object("simulate_summary", j, true);
  if (*lo == 0) snr(h);  // reports undefined SNR after the outputs exist
  return 0;
}

Json estimate_json(std::string_view estimator, std::string_view unit, double detected,
                   double estimate, double correction, const std::vector<FactorTerm>& terms) {
  Json j;
  j["estimator"] = estimator;
  j["unit"] = unit;
  j["R_detected"] = detected;
  j["R_estimate"] = estimate;
  j["correction"] = correction;
  Json f = Json::array();
  for (const auto& t : terms) f.push_back({{"name", t.name}, {"value", t.value}, {"exponent", t.exponent}});
  j["factors"] = std::move(f);
  return j;
}

template <class Unit>
Json run_estimator(EstimatorKind kind, double detected, const std::map<std::string, double>& f) {
  const PairRate<Unit> r(detected);
  auto get = [&](const std::string& k) {
    auto it = f.find(k);
    if (it == f.end()) fail(ErrorKind::config, "estimate input lacks factor '" + k + "'");
    return it->second;
  };
  const auto e = kind == EstimatorKind::cavity
                     ? estimate_rate_cavity(r, get("d"), get("alpha"), get("alpha1"),
                                            get("alpha2"), get("t1"), get("t2"), get("eta"))
                     : estimate_rate_single_pass(r, get("d"), get("alpha1"), get("alpha2"),
                                                 get("t"), get("eta"));
  return estimate_json(kind == EstimatorKind::cavity ? "cavity" : "single_pass", Unit::symbol,
                       e.detected.value(), e.estimate.value(), e.correction, e.breakdown);
}

int cmd_estimate(const Common& c, const std::string& input, std::ostream& out) {
  EstimatorKind kind = EstimatorKind::cavity;
  bool per_MHz = true;
  double detected = 0.0;
  std::map<std::string, double> factors;
  if (!input.empty()) {
    Json in;
    try {
      in = Json::parse(read_file(input));
    } catch (const Json::parse_error& e) {
      fail(ErrorKind::config, "estimate input is not valid JSON: " + std::string(e.what()));
    }
    if (!in.is_object()) fail(ErrorKind::config, "estimate input must be a JSON object");
    for (const auto& [k, v] : in.items()) {
      if (k == "estimator") {
        const auto s = v.get<std::string>();
        if (s != "cavity" && s != "single_pass") fail(ErrorKind::config, "unknown estimator '" + s + "'");
        kind = s == "cavity" ? EstimatorKind::cavity : EstimatorKind::single_pass;
      } else if (k == "unit") {
        const auto s = v.get<std::string>();
        if (s != "per_s_per_MHz_per_mW" && s != "per_s_per_mW") {
          fail(ErrorKind::config, "unknown rate unit '" + s + "'");
        }
        per_MHz = s == "per_s_per_MHz_per_mW";
      } else if (k == "R_detected") {
        if (!v.is_number()) fail(ErrorKind::config, "R_detected must be a number");
        detected = v.get<double>();
      } else if (k == "d" || k == "alpha" || k == "alpha1" || k == "alpha2" || k == "t" ||
                 k == "t1" || k == "t2" || k == "eta") {
        if (!v.is_number()) fail(ErrorKind::config, "factor '" + k + "' must be a number");
        factors[k] = v.get<double>();
      } else {
        fail(ErrorKind::config, "unknown key '" + k + "' in estimate input");
      }
    }
    if (!in.contains("R_detected")) fail(ErrorKind::config, "estimate input lacks R_detected");
  } else {
    const auto cfg = load(c);
    const auto& losses = need(cfg.losses, "losses");
    const auto& chain = need(cfg.detectors, "detectors");
    const auto& src = need(cfg.source, "source");
    kind = losses.estimator;
    if (src.detected_rate_per_s_per_MHz_per_mW) {
      detected = *src.detected_rate_per_s_per_MHz_per_mW;
    } else if (src.detected_rate_per_s_per_mW) {
      detected = *src.detected_rate_per_s_per_mW;
      per_MHz = false;
    } else {
      fail(ErrorKind::config, "[source] needs detected_rate_per_s_per_MHz_per_mW or detected_rate_per_s_per_mW");
    }
    for (const auto& n : LossBudget::names()) factors[n] = losses.budget.factor(n);
    factors["d"] = chain.duty_cycle;
    factors["eta"] = std::sqrt(chain.det1.efficiency * chain.det2.efficiency);
  }
  const Json j = per_MHz ? run_estimator<PerSecondPerMegahertzPerMilliwatt>(kind, detected, factors)
                         : run_estimator<PerSecondPerMilliwatt>(kind, detected, factors);
  Emitter(c, out).object("estimate", j, true);
  return 0;
}

bool parse_double(std::string_view s, double& v) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

int cmd_fit(const Common& c, const std::string& input, const std::string& model_name,
            const std::string& initial_text, int max_iterations, std::ostream& out,
            std::ostream& err) {
  if (input.empty()) fail(ErrorKind::config, "fit needs --input CSV");
  const FitModel model = [&] {
    try {
      return parse_fit_model(model_name);
    } catch (const Error& e) {
      fail(ErrorKind::config, e.what());
    }
  }();
  std::vector<double> x;
  std::vector<double> y;
  std::istringstream in(read_file(input));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto comma = line.find(',');
    double a = 0.0;
    double b = 0.0;
    const bool ok = comma != std::string::npos && line.find(',', comma + 1) == std::string::npos &&
                    parse_double(std::string_view(line).substr(0, comma), a) &&
                    parse_double(std::string_view(line).substr(comma + 1), b);
    if (!ok) {
      if (x.empty() && line_no == 1) continue;  // header
      fail(ErrorKind::config, input + ":" + std::to_string(line_no) + ": expected two numeric columns");
    }
    x.push_back(a);
    y.push_back(b);
  }
  std::optional<std::vector<double>> initial;
  if (!initial_text.empty()) {
    std::vector<double> p;
    std::string_view rest = initial_text;
    while (true) {
      const auto comma = rest.find(',');
      double v = 0.0;
      if (!parse_double(rest.substr(0, comma), v)) fail(ErrorKind::config, "--initial must be comma-separated numbers");
      p.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    initial = std::move(p);
  }
  FitOptions options;
  options.max_iterations = max_iterations;
  const auto r = fit(model, x, y, initial, options);
  Json j;
  j["model"] = to_string(r.model);
  Json params;
  for (std::size_t k = 0; k < r.names.size(); ++k) params[r.names[k]] = r.params[k];
  j["parameters"] = std::move(params);
  j["ssr"] = r.ssr;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  Json derived = Json::object();
  for (const auto& [k, v] : r.derived) derived[k] = v;
  j["derived"] = std::move(derived);
  Emitter(c, out).object("fit", j, true);
  if (!r.converged) {
    print_error(err, ErrorKind::convergence, "fit did not converge in " + std::to_string(r.iterations) + " iterations");
    return exit_code(ErrorKind::convergence);
  }
  return 0;
}

int cmd_resonance(const Common& c, std::ostream& out) {
  const auto cfg = load(c);
  const auto& cav = need(cfg.cavity, "cavity");
  if (!cav.resonance) fail(ErrorKind::config, "[cavity] has no resonance_crystal1/2 settings");
  auto setup = cav.resonance->setup;
  setup.threads = c.threads;
  const auto points = find_triple_resonance(setup, cav.resonance->t1, cav.resonance->t2);
  Table t;
  t.columns = {"T1_C", "T2_C", "residual_Hz"};
  for (const auto& p : points) t.rows.push_back({p.t1_C, p.t2_C, p.residual_hz});
  Emitter(c, out).table("resonance", t, true);
  return 0;
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::convergence: return 4;
    case ErrorKind::io: return 5;
    default: return 3;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cavity-enhanced photon-pair source simulation and analysis", "cavspdc"};
  app.require_subcommand(1);
  Common common;
  bool fwhm_summary = false;
  std::string input;
  std::string model = "exp_envelope";
  std::string initial;
  int max_iterations = FitOptions{}.max_iterations;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", common.config, "Run configuration file");
    if (needs_config) cfg->required();
    sub->add_option("--out", common.out_dir, "Directory for output files");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { common.seed = s; common.seed_given = true; },
        "Random seed (overrides the config)");
    sub->add_option("--format", common.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", common.threads, "Worker threads, 0 = all cores");
    sub->add_option("--kernels", common.kernels, "Kernel variant")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  };

  auto* cavity = app.add_subcommand("cavity", "FSR, finesse, circulating power and tolerances (JSON)");
  add_common(cavity, true);
  auto* tuning = app.add_subcommand("tuning", "Phase-matching temperature tuning curve");
  add_common(tuning, true);
  auto* correlation = app.add_subcommand("correlation", "Raw and detector-convolved correlation traces");
  add_common(correlation, true);
  correlation->add_flag("--fwhm", fwhm_summary, "Print the width summary instead of the trace");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coincidence scan (CSV + JSON summary)");
  add_common(simulate, true);
  auto* estimate = app.add_subcommand("estimate", "Pair-rate estimate from detected rate and losses");
  add_common(estimate, false);
  estimate->add_option("--input", input, "JSON object with R_detected, unit, estimator and factors");
  auto* fitcmd = app.add_subcommand("fit", "Least-squares fit of a two-column CSV");
  add_common(fitcmd, false);
  fitcmd->add_option("--input", input, "Two-column CSV (x,y)")->required();
  fitcmd->add_option("--model", model, "linear|lorentzian|sin2|sinc2|exp_envelope");
  fitcmd->add_option("--initial", initial, "Comma-separated initial parameters");
  fitcmd->add_option("--max-iterations", max_iterations, "Iteration limit")
      ->check(CLI::PositiveNumber);
  auto* resonance = app.add_subcommand("resonance-map", "Triple-resonance temperature grid (CSV)");
  add_common(resonance, true);

  std::vector<std::string> argv_store{"cavspdc"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, ErrorKind::config, e.what());
    return exit_code(ErrorKind::config);
  }

  try {
    if (common.kernels == "auto") {
      kernels::set_isa(std::nullopt);
    } else {
      kernels::set_isa(kernels::parse_isa(common.kernels));
    }
    if (*cavity) return cmd_cavity(common, out);
    if (*tuning) return cmd_tuning(common, out);
    if (*correlation) return cmd_correlation(common, fwhm_summary, out);
    if (*simulate) return cmd_simulate(common, out, err);
    if (*estimate) return cmd_estimate(common, input, out);
    if (*fitcmd) return cmd_fit(common, input, model, initial, max_iterations, out, err);
    if (*resonance) return cmd_resonance(common, out);
  } catch (const Error& e) {
    print_error(err, e.kind(), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    print_error(err, ErrorKind::io, e.what());
    return exit_code(ErrorKind::io);
  }
  return 0;
}

}  // namespace cavspdc::cli
