#pragma once

// Batch front-end: run manifests, key = value config files, and CSV/JSON output.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ecsim/scheme.hpp"

namespace ecsim {

enum class Command { sweep, qfi, probabilities, optimize };
enum class Format { csv, json };
enum class Readout { parity, reference };

struct EtaGrid {
  double start = 1.0;
  double stop = 0.2;
  int count = 1;

  [[nodiscard]] std::vector<double> points() const {
    std::vector<double> p(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) p[i] = count == 1 ? start : start + (stop - start) * i / double(count - 1);
    return p;
  }
};

struct RunManifest {
  Command command = Command::sweep;
  SchemeConfig config{};
  /// Set when eta_start/eta_stop/eta_count appear; otherwise sweeps use the single config eta.
  std::optional<EtaGrid> eta_grid;
  std::vector<Probe> probes{Probe::EM, Probe::NF, Probe::UF};
  Readout readout = Readout::reference;
  OptimizerOptions optimizer{};
  unsigned threads = 0;
  /// Empty: write to the supplied stream. For sweeps this is a prefix: <out>_<PROBE>.<ext>.
  std::string output_path;
  Format format = Format::csv;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline long parse_integer(const std::string& key, const std::string& v) {
  const double x = parse_real(key, v);
  if (x != std::floor(x)) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<long>(x);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);) out.push_back(trim(item));
  return out;
}

inline EtaGrid& grid(RunManifest& m) {
  if (!m.eta_grid) m.eta_grid = EtaGrid{};
  return *m.eta_grid;
}

}  // namespace detail

inline Command parse_command(const std::string& v) {
  if (v == "sweep") return Command::sweep;
  if (v == "qfi") return Command::qfi;
  if (v == "probabilities") return Command::probabilities;
  if (v == "optimize") return Command::optimize;
  throw ConfigError("command: unknown value '" + v + "' (sweep|qfi|probabilities|optimize)");
}

inline std::vector<Probe> parse_probes(const std::string& v) {
  std::vector<Probe> out;
  for (const auto& item : detail::split(v, ',')) {
    const auto p = parse_probe(item);
    if (!p) throw ConfigError("probes: unknown probe '" + item + "' (EM,EP,EF,EVEN_EF,NF,UF)");
    out.push_back(*p);
  }
  if (out.empty()) throw ConfigError("probes: empty list");
  return out;
}

/// Applies one setting; keys use underscores (eta_start) or dashes (eta-start).
inline void apply_setting(RunManifest& m, std::string key, const std::string& value) {
  for (auto& c : key) {
    if (c == '-') c = '_';
  }
  auto& c = m.config;
  if (key == "command") {
    m.command = parse_command(value);
  } else if (key == "alpha0") {
    c.alpha0 = detail::parse_real(key, value);
  } else if (key == "alpha1") {
    c.alpha1 = detail::parse_real(key, value);
  } else if (key == "phi") {
    c.phi = detail::parse_real(key, value);
  } else if (key == "eta") {
    c.eta = detail::parse_real(key, value);
  } else if (key == "eta_arm2") {
    c.eta_arm2 = detail::parse_real(key, value);
  } else if (key == "reference_eta") {
    c.reference_eta = detail::parse_real(key, value);
  } else if (key == "eta_start") {
    detail::grid(m).start = detail::parse_real(key, value);
  } else if (key == "eta_stop") {
    detail::grid(m).stop = detail::parse_real(key, value);
  } else if (key == "eta_count") {
    detail::grid(m).count = static_cast<int>(detail::parse_integer(key, value));
  } else if (key == "input_kind") {
    if (value == "standard") {
      c.input_kind = InputKind::standard;
    } else if (value == "even") {
      c.input_kind = InputKind::even;
    } else {
      throw ConfigError("input_kind: unknown value '" + value + "' (standard|even)");
    }
  } else if (key == "reference_kind") {
    if (value == "even_cat") {
      c.reference_kind = ReferenceKind::even_cat;
    } else if (value == "coherent") {
      c.reference_kind = ReferenceKind::coherent;
    } else {
      throw ConfigError("reference_kind: unknown value '" + value + "' (even_cat|coherent)");
    }
  } else if (key == "readout") {
    if (value == "parity") {
      m.readout = Readout::parity;
    } else if (value == "reference") {
      m.readout = Readout::reference;
    } else {
      throw ConfigError("readout: unknown value '" + value + "' (parity|reference)");
    }
  } else if (key == "probes") {
    m.probes = parse_probes(value);
  } else if (key == "tail_budget") {
    c.cutoff_policy.tail_budget = detail::parse_real(key, value);
  } else if (key == "alpha1_count") {
    m.optimizer.alpha1_count = static_cast<std::size_t>(detail::parse_integer(key, value));
  } else if (key == "phi_count") {
    m.optimizer.phi_count = static_cast<std::size_t>(detail::parse_integer(key, value));
  } else if (key == "threads") {
    m.threads = static_cast<unsigned>(detail::parse_integer(key, value));
  } else if (key == "out") {
    m.output_path = value;
  } else if (key == "format") {
    if (value == "csv") {
      m.format = Format::csv;
    } else if (value == "json") {
      m.format = Format::json;
    } else {
      throw ConfigError("format: unknown value '" + value + "' (csv|json)");
    }
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

/// Parses `key = value` lines; blank lines and lines starting with '#' are ignored.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    auto key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing key");
    out.emplace_back(std::move(key), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline void apply_config_file(RunManifest& m, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(m, k, v);
}

/// Field-level checks; throws ConfigError naming the offending field.
inline void validate(const RunManifest& m) {
  const auto& c = m.config;
  auto unit = [](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + ": must lie in [0, 1]");
  };
  if (!(c.alpha0 >= 0.0) || !std::isfinite(c.alpha0)) throw ConfigError("alpha0: must be a finite value >= 0");
  if (!(c.alpha1 >= 0.0) || !std::isfinite(c.alpha1)) throw ConfigError("alpha1: must be a finite value >= 0");
  if (!std::isfinite(c.phi)) throw ConfigError("phi: must be finite");
  unit("eta", c.eta);
  unit("eta_arm2", c.eta2());
  unit("reference_eta", c.reference_eta);
  if (!(c.cutoff_policy.tail_budget > 0.0)) throw ConfigError("tail_budget: must be positive");
  if (m.eta_grid) {
    unit("eta_start", m.eta_grid->start);
    unit("eta_stop", m.eta_grid->stop);
    if (m.eta_grid->count < 1) throw ConfigError("eta_count: must be >= 1");
  }
  if (m.optimizer.alpha1_count < 2) throw ConfigError("alpha1_count: must be >= 2");
  if (m.optimizer.phi_count < 2) throw ConfigError("phi_count: must be >= 2");
  if (m.command == Command::optimize && !(c.alpha0 > 0.0)) throw ConfigError("alpha0: optimize needs alpha0 > 0");
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr const char* kCurveHeader = "eta,delta_phi,alpha1_opt,phi_opt,tail_mass";

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_curve_csv(std::ostream& out, const PrecisionCurve& curve) {
  out << kCurveHeader << '\n';
  for (const auto& r : curve.rows) {
    out << format_number(r.eta) << ',' << format_number(r.delta_phi) << ',' << format_number(r.alpha1_opt) << ','
        << format_number(r.phi_opt) << ',' << format_number(r.tail_mass) << '\n';
  }
}

namespace detail {

// JSON has no infinity; an unbounded delta_phi is stored as null.
inline nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const PrecisionCurve& curve) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : curve.rows) {
    rows.push_back({{"eta", r.eta},
                    {"delta_phi", detail::number_or_null(r.delta_phi)},
                    {"alpha1_opt", r.alpha1_opt},
                    {"phi_opt", r.phi_opt},
                    {"tail_mass", r.tail_mass}});
  }
  return {{"probe_label", curve.probe_label},
          {"alpha0", curve.alpha0},
          {"photon_number", curve.photon_number},
          {"noon_size", curve.noon_size},
          {"rows", rows}};
}

inline PrecisionCurve curve_from_json(const nlohmann::json& j) {
  PrecisionCurve c;
  c.probe_label = j.at("probe_label").get<std::string>();
  c.alpha0 = j.at("alpha0").get<double>();
  c.photon_number = j.at("photon_number").get<double>();
  c.noon_size = j.at("noon_size").get<int>();
  for (const auto& r : j.at("rows")) {
    c.rows.push_back(CurveRow{r.at("eta").get<double>(), detail::number_from(r.at("delta_phi")),
                              r.at("alpha1_opt").get<double>(), r.at("phi_opt").get<double>(),
                              r.at("tail_mass").get<double>()});
  }
  return c;
}

inline void write_distribution_csv(std::ostream& out, const OutcomeDistribution& d) {
  for (std::size_t m = 0; m < d.modes; ++m) out << 'n' << m << ',';
  out << "probability\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int n : d.occupation(i)) out << n << ',';
    out << format_number(d.probabilities[i]) << '\n';
  }
}

inline nlohmann::json to_json(const OutcomeDistribution& d) {
  nlohmann::json outcomes = nlohmann::json::array();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto occ = d.occupation(i);
    outcomes.push_back({{"occupation", std::vector<int>(occ.begin(), occ.end())}, {"probability", d.probabilities[i]}});
  }
  return {{"modes", d.modes}, {"phi", d.phi}, {"tail_mass", d.tail_mass}, {"outcomes", outcomes}};
}

// ---------------------------------------------------------------------------
// Dispatch

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitComputation = 3;

namespace detail {

inline std::string extension(Format f) { return f == Format::csv ? ".csv" : ".json"; }

inline void emit(const RunManifest& m, std::ostream& out, const std::string& text) {
  if (m.output_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(m.output_path);
  if (!file) throw ConfigError("out: cannot write '" + m.output_path + "'");
  file << text;
}

inline void run_sweep(const RunManifest& m, std::ostream& out) {
  const auto etas = m.eta_grid ? m.eta_grid->points() : std::vector<double>{m.config.eta};
  SweepOptions options;
  options.optimizer = m.optimizer;
  options.base = m.config;
  options.threads = m.threads;
  const auto curves = sweep_loss(m.config.alpha0, etas, m.probes, options);
  for (const auto& curve : curves) {
    std::ostringstream text;
    if (m.format == Format::csv) {
      write_curve_csv(text, curve);
    } else {
      text << to_json(curve).dump(2) << '\n';
    }
    if (m.output_path.empty()) {
      out << "# " << curve.probe_label << '\n' << text.str();
      continue;
    }
    const auto path = m.output_path + "_" + curve.probe_label + extension(m.format);
    std::ofstream file(path);
    if (!file) throw ConfigError("out: cannot write '" + path + "'");
    file << text.str();
    out << path << '\n';
  }
}

inline void run_qfi(const RunManifest& m, std::ostream& out) {
  const auto& c = m.config;
  const double f = qfi_mixed(lossy_input_family(c.alpha0, c.input_kind, c.eta, c.eta2()), normalize_angle(c.phi));
  const double dphi = f > 0.0 ? cramer_rao(f, 1) : std::numeric_limits<double>::infinity();
  std::ostringstream text;
  if (m.format == Format::csv) {
    text << "fisher_quantum,delta_phi\n" << format_number(f) << ',' << format_number(dphi) << '\n';
  } else {
    text << nlohmann::json{{"fisher_quantum", f}, {"delta_phi", number_or_null(dphi)}}.dump(2) << '\n';
  }
  emit(m, out, text.str());
}

inline void run_probabilities(const RunManifest& m, std::ostream& out) {
  const auto c = validated(m.config);
  const auto rho = m.readout == Readout::parity ? parity_family(c)(c.phi) : reference_family(c)(c.phi);
  const auto d = outcome_distribution(rho, c.cutoff_policy, c.phi);
  std::ostringstream text;
  if (m.format == Format::csv) {
    write_distribution_csv(text, d);
  } else {
    text << to_json(d).dump(2) << '\n';
  }
  emit(m, out, text.str());
  if (m.format == Format::csv) {
    if (m.output_path.empty()) out << '\n';
    out << "tail_mass," << format_number(d.tail_mass) << '\n';
  }
}

inline void run_optimize(const RunManifest& m, std::ostream& out) {
  const auto& c = m.config;
  const auto o = m.readout == Readout::parity ? optimize_parity(c.alpha0, c.eta, c.input_kind, m.optimizer, c)
                                              : optimize_reference(c.alpha0, c.eta, c.input_kind, m.optimizer, c);
  std::ostringstream text;
  if (m.format == Format::csv) {
    text << "alpha1_opt,phi_opt,delta_phi,tail_mass,local_minimum\n"
         << format_number(o.alpha1) << ',' << format_number(o.phi) << ',' << format_number(o.delta_phi) << ','
         << format_number(o.tail_mass) << ',' << (o.local_minimum ? "true" : "false") << '\n';
  } else {
    text << nlohmann::json{{"alpha1_opt", o.alpha1},
                           {"phi_opt", o.phi},
                           {"delta_phi", number_or_null(o.delta_phi)},
                           {"tail_mass", o.tail_mass},
                           {"local_minimum", o.local_minimum}}
                .dump(2)
         << '\n';
  }
  emit(m, out, text.str());
}

}  // namespace detail

/// Executes a manifest. Returns 0 on success, 2 for configuration errors, 3 for
/// computation errors; messages go to `err`.
inline int run(const RunManifest& m, std::ostream& out, std::ostream& err) {
  try {
    validate(m);
    switch (m.command) {
      case Command::sweep: detail::run_sweep(m, out); break;
      case Command::qfi: detail::run_qfi(m, out); break;
      case Command::probabilities: detail::run_probabilities(m, out); break;
      case Command::optimize: detail::run_optimize(m, out); break;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitComputation;
  }
}

}  // namespace ecsim
