#include "cavspdc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cavspdc/error.hpp"

namespace cavspdc {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct RawSection {
  std::string name;
  int line = 0;
  std::map<std::string, Entry, std::less<>> entries;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

class Reader {
 public:
  Reader(RawSection& raw, std::string origin) : raw_(raw), origin_(std::move(origin)) {}

  bool has(std::string_view key) const { return raw_.entries.contains(key); }

  double number(std::string_view key) {
    auto v = maybe_number(key);
    if (!v) fail(ErrorKind::config, where() + "missing required key '" + std::string(key) + "'");
    return *v;
  }

  double number_or(std::string_view key, double fallback) {
    return maybe_number(key).value_or(fallback);
  }

  std::optional<double> maybe_number(std::string_view key) {
    Entry* e = take(key);
    if (!e) return std::nullopt;
    double v = 0.0;
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      fail(ErrorKind::config, at(*e) + "'" + std::string(key) + "' is not a finite number: '" +
                                  e->value + "'");
    }
    return v;
  }

  int integer_or(std::string_view key, int fallback) {
    Entry* e = take(key);
    if (!e) return fallback;
    int v = 0;
    const char* first = e->value.data();
    const char* last = first + e->value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      fail(ErrorKind::config, at(*e) + "'" + std::string(key) + "' is not an integer: '" +
                                  e->value + "'");
    }
    return v;
  }

  std::string word(std::string_view key) {
    Entry* e = take(key);
    if (!e) fail(ErrorKind::config, where() + "missing required key '" + std::string(key) + "'");
    return e->value;
  }

  std::string word_or(std::string_view key, std::string fallback) {
    Entry* e = take(key);
    return e ? e->value : std::move(fallback);
  }

  template <class Enum>
  Enum choice(std::string_view key, Enum fallback,
              std::initializer_list<std::pair<std::string_view, Enum>> options) {
    Entry* e = take(key);
    if (!e) return fallback;
    for (const auto& [name, value] : options) {
      if (e->value == name) return value;
    }
    std::string allowed;
    for (const auto& [name, value] : options) allowed += (allowed.empty() ? "" : "|") + std::string(name);
    fail(ErrorKind::config, at(*e) + "'" + std::string(key) + "' must be one of " + allowed +
                                ", got '" + e->value + "'");
  }

  /// Keys starting with prefix, in lexical order (not yet marked used).
  std::vector<std::string> keys_with_prefix(std::string_view prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, e] : raw_.entries) {
      if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0) out.push_back(k);
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, e] : raw_.entries) {
      if (!e.used) fail(ErrorKind::config, at(e) + "unknown key '" + k + "' in [" + raw_.name + "]");
    }
  }

  std::string where() const {
    return origin_ + ":" + std::to_string(raw_.line) + ": [" + raw_.name + "] ";
  }

 private:
  Entry* take(std::string_view key) {
    auto it = raw_.entries.find(key);
    if (it == raw_.entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  std::string at(const Entry& e) const { return origin_ + ":" + std::to_string(e.line) + ": "; }

  RawSection& raw_;
  std::string origin_;
};

// Run a domain validator and report its failure as a config error.
template <class F>
void checked(const Reader& r, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    fail(ErrorKind::config, r.where() + e.what());
  }
}

AxisDispersion read_axis(Reader& r, const std::string& ax) {
  AxisDispersion c;
  c.a = r.number(ax + "_A");
  c.b1 = r.number_or(ax + "_B1", 0.0);
  c.c1 = r.number_or(ax + "_C1_um2", 0.0);
  c.b2 = r.number_or(ax + "_B2", 0.0);
  c.c2 = r.number_or(ax + "_C2_um2", 0.0);
  c.d = r.number_or(ax + "_D_per_um2", 0.0);
  c.dndt[0] = r.number_or(ax + "_dndT0_per_K", 0.0);
  c.dndt[1] = r.number_or(ax + "_dndT1_um_per_K", 0.0);
  c.dndt[2] = r.number_or(ax + "_dndT2_um2_per_K", 0.0);
  c.dndt[3] = r.number_or(ax + "_dndT3_um3_per_K", 0.0);
  return c;
}

IndexModel read_index_model(Reader& r) {
  IndexModel m;
  m.y = read_axis(r, "y");
  m.z = read_axis(r, "z");
  m.t_ref_C = r.number_or("t_ref_C", 22.0);
  m.lambda_min_nm = r.number("lambda_min_nm");
  m.lambda_max_nm = r.number("lambda_max_nm");
  m.t_min_C = r.number("t_min_C");
  m.t_max_C = r.number("t_max_C");
  checked(r, [&] { validate(m); });
  return m;
}

Axis read_axis_name(Reader& r, const std::string& key, Axis fallback) {
  Axis a = fallback;
  const std::string name = r.word_or(key, std::string(to_string(fallback)));
  checked(r, [&] { a = parse_axis(name); });
  return a;
}

CrystalSection read_crystal(Reader& r, const IndexModel& model) {
  CrystalSection s;
  s.crystal.model = model;
  s.crystal.length_mm = r.number("length_mm");
  s.crystal.period_um = r.number("period_um");
  s.crystal.grating_order = r.integer_or("grating_order", 1);
  s.crystal.pump = read_axis_name(r, "pump_axis", Axis::y);
  s.crystal.signal = read_axis_name(r, "signal_axis", Axis::y);
  s.crystal.idler = read_axis_name(r, "idler_axis", Axis::z);
  s.pump_nm = r.number("pump_nm");
  s.signal_nm = r.number_or("signal_nm", 2.0 * s.pump_nm);
  s.idler_nm = r.number_or("idler_nm", 2.0 * s.pump_nm);
  s.tuning_lo_C = r.number_or("tuning_min_C", model.t_min_C);
  s.tuning_hi_C = r.number_or("tuning_max_C", model.t_max_C);
  s.tuning_samples = r.integer_or("tuning_samples", 501);
  s.bracket_lo_C = r.number_or("bracket_min_C", model.t_min_C);
  s.bracket_hi_C = r.number_or("bracket_max_C", model.t_max_C);
  checked(r, [&] { validate(s.crystal); });
  return s;
}

CavitySection read_cavity(Reader& r, const std::optional<IndexModel>& model) {
  CavitySection s;
  const auto names = split_words(r.word("segments"));
  if (names.empty()) fail(ErrorKind::config, r.where() + "'segments' lists no segments");
  std::set<std::string> seen;
  for (const auto& name : names) {
    if (!seen.insert(name).second) {
      fail(ErrorKind::config, r.where() + "segment '" + name + "' listed twice");
    }
    Segment seg;
    seg.name = name;
    seg.length_mm = r.number(name + ".length_mm");
    const std::string prefix = name + ".index_";
    for (const auto& key : r.keys_with_prefix(prefix)) {
      seg.index[key.substr(prefix.size())] = r.number(key);
    }
    s.geometry.segments.push_back(std::move(seg));
  }
  auto read_mirror = [&](const std::string& mirror, auto& target) {
    const std::string prefix = mirror + ".transmittance_";
    const std::string suffix = "_frac";
    for (const auto& key : r.keys_with_prefix(prefix)) {
      if (key.size() <= prefix.size() + suffix.size() ||
          key.compare(key.size() - suffix.size(), suffix.size(), suffix) != 0) {
        continue;  // left unused, reported by finish()
      }
      target[key.substr(prefix.size(), key.size() - prefix.size() - suffix.size())] = r.number(key);
    }
  };
  read_mirror("input", s.geometry.input_transmittance);
  read_mirror("output", s.geometry.output_transmittance);
  s.pump_label = r.word("pump_label");
  s.down_label = r.word("down_label");
  s.pump_nm = r.number("pump_nm");
  s.down_nm = r.number_or("down_nm", 2.0 * s.pump_nm);
  s.bandwidth_hz = r.number("bandwidth_MHz") * 1e6;
  s.leaked_power_mW = r.number_or("leaked_power_mW", 0.0);
  s.differential_dndT = r.number_or("differential_dndT_per_K", 0.0);
  s.detuning_length_mm = r.number_or("detuning_length_mm", 10.0);
  checked(r, [&] {
    validate(s.geometry);
    optical_path_mm(s.geometry, s.pump_label);
    optical_path_mm(s.geometry, s.down_label);
    require(s.geometry.output_transmittance.contains(s.pump_label), ErrorKind::lookup,
            "no output transmittance for " + s.pump_label);
    require(s.bandwidth_hz > 0.0, ErrorKind::argument, "bandwidth must be positive");
  });

  if (r.has("resonance_crystal1") || r.has("resonance_crystal2")) {
    if (!model) fail(ErrorKind::config, r.where() + "resonance search needs [index_model]");
    ResonanceSection res;
    res.crystal1 = r.word("resonance_crystal1");
    res.crystal2 = r.word("resonance_crystal2");
    auto& setup = res.setup;
    setup.pump_nm = s.pump_nm;
    setup.bandwidth_hz = s.bandwidth_hz;
    setup.mode_window = r.integer_or("resonance_mode_window", 0);
    auto crystal = [&](const std::string& name) {
      auto it = std::find_if(s.geometry.segments.begin(), s.geometry.segments.end(),
                             [&](const Segment& g) { return g.name == name; });
      if (it == s.geometry.segments.end()) {
        fail(ErrorKind::config, r.where() + "resonance crystal '" + name + "' is not a segment");
      }
      ResonanceCrystal c;
      c.model = *model;
      c.length_mm = it->length_mm;
      const auto axes = split_words(r.word_or(name + ".axes", "y y z"));
      if (axes.size() != 3) {
        fail(ErrorKind::config, r.where() + name + ".axes needs pump, signal and idler axes");
      }
      checked(r, [&] {
        c.pump = parse_axis(axes[0]);
        c.signal = parse_axis(axes[1]);
        c.idler = parse_axis(axes[2]);
      });
      return c;
    };
    setup.crystal1 = crystal(res.crystal1);
    setup.crystal2 = crystal(res.crystal2);
    if (res.crystal1 == res.crystal2) {
      fail(ErrorKind::config, r.where() + "resonance crystals must be different segments");
    }
    for (const auto& g : s.geometry.segments) {
      if (g.name != res.crystal1 && g.name != res.crystal2) {
        setup.passive_path_mm += g.length_mm * g.index.at(s.pump_label);
      }
    }
    res.t1 = {r.number("resonance_T1_min_C"), r.number("resonance_T1_max_C"),
              r.integer_or("resonance_T1_steps", 101)};
    res.t2 = {r.number("resonance_T2_min_C"), r.number("resonance_T2_max_C"),
              r.integer_or("resonance_T2_steps", 101)};
    if (res.t1.steps < 1 || res.t2.steps < 1) {
      fail(ErrorKind::config, r.where() + "resonance grids need at least one step");
    }
    s.resonance = std::move(res);
  }
  return s;
}

CombSection read_comb(Reader& r) {
  CombSection s;
  s.spec.gamma_s_hz = r.number("gamma_s_MHz") * 1e6;
  s.spec.gamma_i_hz = r.number_or("gamma_i_MHz", s.spec.gamma_s_hz * 1e-6) * 1e6;
  s.spec.fsr_hz = r.number("fsr_GHz") * 1e9;
  s.spec.modes = r.integer_or("modes", 1);
  s.spec.tau0_s = r.number_or("tau0_ps", 0.0) * 1e-12;
  s.spec.omega_s_hz = r.number_or("center_THz", 0.0) * 1e12;
  s.spec.omega_i_hz = s.spec.omega_s_hz;
  s.half_span_s = r.number_or("half_span_ns", 150.0) * 1e-9;
  s.step_s = r.number_or("step_ns", 0.05) * 1e-9;
  s.sigma_s = r.number_or("sigma_ns", 1.4) * 1e-9;
  s.options.pairing = r.choice("pairing", ModePairing::paired,
                               {{"paired", ModePairing::paired},
                                {"unconstrained", ModePairing::unconstrained}});
  s.options.sampling = r.choice("sampling", Sampling::cell_average,
                                {{"cell_average", Sampling::cell_average},
                                 {"point", Sampling::point}});
  checked(r, [&] {
    validate(s.spec);
    require(s.step_s > 0.0 && s.half_span_s > 0.0 && s.sigma_s > 0.0, ErrorKind::argument,
            "half_span_ns, step_ns and sigma_ns must be positive");
  });
  return s;
}

SourceSection read_source(Reader& r) {
  SourceSection s;
  s.source.rate_per_s_per_mW = r.number_or("rate_per_s_per_mW", 0.0);
  s.source.pump_mW = r.number_or("pump_mW", 0.0);
  s.source.shape = r.choice("shape", OffsetShape::single_mode,
                            {{"single_mode", OffsetShape::single_mode},
                             {"trace", OffsetShape::trace},
                             {"delta", OffsetShape::delta}});
  s.source.gamma_hz = r.number_or("gamma_MHz", 8.0) * 1e6;
  s.detected_rate_per_s_per_MHz_per_mW = r.maybe_number("detected_rate_per_s_per_MHz_per_mW");
  s.detected_rate_per_s_per_mW = r.maybe_number("detected_rate_per_s_per_mW");
  checked(r, [&] {
    require(s.source.rate_per_s_per_mW >= 0.0 && s.source.pump_mW >= 0.0, ErrorKind::argument,
            "rate and pump power must be >= 0");
    require(s.source.gamma_hz > 0.0, ErrorKind::argument, "gamma_MHz must be positive");
  });
  return s;
}

DetectionChainConfig read_detectors(Reader& r) {
  DetectionChainConfig c;
  auto det = [&](const std::string& p, DetectorConfig& d) {
    d.efficiency = r.number_or(p + "_efficiency_frac", d.efficiency);
    d.gate_ns = r.number_or(p + "_gate_ns", d.gate_ns);
    d.dead_ns = r.number_or(p + "_dead_ns", d.dead_ns);
    d.dark_per_ns = r.number_or(p + "_dark_per_ns", d.dark_per_ns);
    d.jitter_ns = r.number_or(p + "_jitter_ns", d.jitter_ns);
  };
  det("det1", c.det1);
  det("det2", c.det2);
  const std::initializer_list<std::pair<std::string_view, TriggerMode>> modes{
      {"internal", TriggerMode::internal}, {"triggered", TriggerMode::triggered}};
  c.det1_mode = r.choice("det1_mode", TriggerMode::internal, modes);
  c.det2_mode = r.choice("det2_mode", TriggerMode::triggered, modes);
  c.trigger_hz = r.number_or("trigger_MHz", 10.0) * 1e6;
  c.optical_delay_ns = r.number_or("optical_delay_ns", c.optical_delay_ns);
  c.duty_cycle = r.number_or("duty_cycle_frac", c.duty_cycle);
  c.electrical_delay_ns = balanced_delay_ns(c);
  checked(r, [&] { validate(c); });
  return c;
}

LossesSection read_losses(Reader& r) {
  LossesSection s;
  for (const auto& name : LossBudget::names()) {
    s.budget.factor(name) = r.number_or(name + "_frac", 1.0);
  }
  const bool single = r.choice("arms", false, {{"cavity", false}, {"single_pass", true}});
  s.arms = single ? ArmAssignment::single_pass() : ArmAssignment::cavity();
  s.estimator = r.choice("estimator", single ? EstimatorKind::single_pass : EstimatorKind::cavity,
                         {{"cavity", EstimatorKind::cavity},
                          {"single_pass", EstimatorKind::single_pass}});
  checked(r, [&] { validate(s.budget); });
  return s;
}

ScanSection read_scan(Reader& r) {
  ScanSection s;
  s.offset_start_ns = r.number_or("offset_start_ns", s.offset_start_ns);
  s.offset_stop_ns = r.number_or("offset_stop_ns", s.offset_stop_ns);
  s.offset_step_ns = r.number_or("offset_step_ns", s.offset_step_ns);
  s.far_offset_ns = r.number_or("far_offset_ns", s.far_offset_ns);
  s.accumulation_s = r.number_or("accumulation_s", s.accumulation_s);
  s.method = r.choice("method", ScanMethod::gate_sampled,
                      {{"gate_sampled", ScanMethod::gate_sampled},
                       {"full_stream", ScanMethod::full_stream}});
  checked(r, [&] {
    require(s.offset_step_ns > 0.0, ErrorKind::argument, "offset_step_ns must be positive");
    require(s.offset_start_ns <= s.offset_stop_ns, ErrorKind::argument,
            "offset_start_ns must not exceed offset_stop_ns");
    require(s.accumulation_s > 0.0, ErrorKind::argument, "accumulation_s must be positive");
  });
  return s;
}

}  // namespace

std::vector<double> ScanSection::offsets() const {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((offset_stop_ns - offset_start_ns) / offset_step_ns + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(offset_start_ns + k * offset_step_ns);
  if (std::find(out.begin(), out.end(), far_offset_ns) == out.end()) out.push_back(far_offset_ns);
  std::sort(out.begin(), out.end());
  return out;
}

RunConfig parse_run_config(std::string_view text, const std::string& origin) {
  RawSection top{"", 0, {}};
  std::vector<RawSection> sections;
  RawSection* current = &top;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string here = origin + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::config, here + "malformed section header");
      const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
      for (const auto& s : sections) {
        if (s.name == name) fail(ErrorKind::config, here + "section [" + name + "] repeated");
      }
      sections.push_back({name, line_no, {}});
      current = &sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::config, here + "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || value.empty()) fail(ErrorKind::config, here + "empty key or value");
    if (!current->entries.emplace(key, Entry{value, line_no, false}).second) {
      fail(ErrorKind::config, here + "duplicate key '" + key + "'");
    }
  }

  static const std::set<std::string, std::less<>> known{
      "index_model", "crystal", "cavity", "comb", "source", "detectors", "losses", "scan"};
  auto find = [&](std::string_view name) -> RawSection* {
    for (auto& s : sections) {
      if (s.name == name) return &s;
    }
    return nullptr;
  };
  for (const auto& s : sections) {
    if (!known.contains(s.name)) {
      fail(ErrorKind::config,
           origin + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }

  RunConfig cfg;
  {
    Reader r(top, origin);
    if (auto* e = top.entries.contains("seed") ? &top.entries["seed"] : nullptr) {
      e->used = true;
      std::uint64_t seed = 0;
      auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), seed);
      if (ec != std::errc() || ptr != e->value.data() + e->value.size()) {
        fail(ErrorKind::config, origin + ":" + std::to_string(e->line) +
                                    ": seed must be an unsigned integer");
      }
      cfg.seed = seed;
    }
    r.finish();
  }
  auto with = [&](std::string_view name, auto&& build) {
    if (RawSection* s = find(name)) {
      Reader r(*s, origin);
      build(r);
      r.finish();
    }
  };
  with("index_model", [&](Reader& r) { cfg.index_model = read_index_model(r); });
  with("crystal", [&](Reader& r) {
    if (!cfg.index_model) fail(ErrorKind::config, r.where() + "[crystal] needs [index_model]");
    cfg.crystal = read_crystal(r, *cfg.index_model);
  });
  with("cavity", [&](Reader& r) { cfg.cavity = read_cavity(r, cfg.index_model); });
  with("comb", [&](Reader& r) { cfg.comb = read_comb(r); });
  with("source", [&](Reader& r) { cfg.source = read_source(r); });
  with("detectors", [&](Reader& r) { cfg.detectors = read_detectors(r); });
  with("losses", [&](Reader& r) { cfg.losses = read_losses(r); });
  with("scan", [&](Reader& r) { cfg.scan = read_scan(r); });
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "error reading config file '" + path.string() + "'");
  return parse_run_config(buf.str(), path.string());
}

}  // namespace cavspdc
