#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "monopole/monopole.hpp"

namespace monopole::cli {

using json = nlohmann::json;

inline constexpr int format_version = 1;

/// Exit codes of the front end.
enum ExitCode : int { Ok = 0, ConfigFailure = 1, NumericalFailure = 2, PhysicsFailure = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output file name -> contents.
using Files = std::map<std::string, std::string>;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"fields",          "gauge-map",        "flux",
                                              "holonomy",        "harmonics",        "spectrum-analytic",
                                              "spectrum-numeric", "adiabatic",        "paper-repro"};
  return names;
}

inline std::string summary(const std::string& name) {
  static const std::map<std::string, std::string> text{
      {"fields", "Rabi fields, dressed energies and gaps on a Cartesian grid"},
      {"gauge-map", "analytic vs numeric connection (and curvature) per patch"},
      {"flux", "curvature flux and Chern number through origin-centred spheres"},
      {"holonomy", "transition-function winding around overlap circles"},
      {"harmonics", "monopole harmonics on a grid and their Gram matrix"},
      {"spectrum-analytic", "closed-form trap levels"},
      {"spectrum-numeric", "finite-difference levels per m sector with analytic deltas"},
      {"adiabatic", "adiabaticity ratio map and threshold radii"},
      {"paper-repro", "case-study numbers with magnitude verdicts"}};
  return text.at(name);
}

inline json box(std::vector<double> lower, std::vector<double> upper, std::vector<int> counts) {
  return {{"lower", lower}, {"upper", upper}, {"counts", counts}};
}

/// Every accepted key with its default. Anything not listed here is rejected.
inline json default_config() {
  return {
      {"atom", {{"mass_kg", 2.2069466e-25}, {"energy_J", 1e-26}}},
      {"beam", {{"xi", 1.0}, {"xi_is_amplitude", false}, {"g", 1}, {"eta", 1.0}, {"k", 0.0}, {"delta", 0.0}}},
      {"trap", {{"type", "harmonic"}, {"omega", 100.0}, {"omega_z", 1e6}, {"z0", 1e-3}}},
      {"geometry", {{"overlap_half_width", pi / 12.0}, {"exclusion_radius", 1e-9}}},
      {"fields", {{"grid", box({-1, -1, -1}, {1, 1, 1}, {8, 8, 8})}}},
      {"gauge_map",
       {{"grid", box({-1, -1, -1}, {1, 1, 1}, {6, 6, 6})}, {"include_kz", false}, {"h_rel", 1e-4}, {"curvature", true}}},
      {"flux", {{"radii", {0.1, 1.0, 10.0}}, {"quadrature_order", 64}, {"phi_points", 128}}},
      {"holonomy", {{"radius", 1.0}, {"thetas", json::array({pi / 2})}, {"samples", 256}}},
      {"harmonics", {{"q", {0.0, 0.5, 1.0, 2.0}}, {"l_extra", 2}, {"theta_points", 9}, {"phi_points", 8},
                     {"quadrature_order", 32}, {"quadrature_phi_points", 64}}},
      {"spectrum", {{"m_min", -2}, {"m_max", 2}, {"n_rho_max", 2}, {"n_z_max", 2}}},
      {"spectrum_numeric",
       {{"m", {-2, -1, 0, 1, 2}},
        {"n_eigs", 5},
        {"potential", "approx"},
        {"grid", {{"n_rho", 96}, {"n_z", 96}, {"rho_extent", 8.0}, {"z_extent", 8.0}, {"richardson_tolerance", 0.0}}},
        {"residual_tolerance", 1e-8},
        {"seed", 12345}}},
      {"adiabatic",
       {{"criterion", 1.0},
        {"r_min", 1e-9},
        {"directions", {{1, 0, 0}, {0, 0, 1}, {0, 0, -1}, {1, 1, 1}}},
        {"grid", box({-1e-3, -1e-3, -1e-3}, {1e-3, 1e-3, 1e-3}, {16, 16, 16})}}},
      {"paper_repro", {{"region_counts", 32}, {"ensemble_radius", 1e-3}}},
      {"output", {{"directory", "out"}, {"formats", {"json", "csv"}}}},
  };
}

inline const std::map<std::string, std::vector<std::string>>& trap_keys() {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"none", {}}, {"spherical", {"omega"}}, {"harmonic", {"omega", "omega_z", "z0"}}};
  return keys;
}

namespace detail {

inline const char* type_name(const json& v) {
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return v.type_name();
}

inline bool same_kind(const json& reference, const json& v) {
  if (reference.is_number_integer()) return v.is_number_integer();
  if (reference.is_number()) return v.is_number();
  return reference.type() == v.type();
}

/// Recursive structural check against the defaults: unknown keys and type
/// mismatches are errors. The trap block is checked separately.
inline void check_structure(const json& reference, const json& v, const std::string& path) {
  if (reference.is_object()) {
    if (!v.is_object()) throw ConfigError(path + ": expected an object, got " + type_name(v));
    for (const auto& [key, value] : v.items()) {
      const std::string sub = path.empty() ? key : path + "." + key;
      if (path.empty() && key == "trap") continue;
      if (!reference.contains(key)) throw ConfigError("unknown key '" + sub + "'");
      check_structure(reference.at(key), value, sub);
    }
    return;
  }
  if (reference.is_array()) {
    if (!v.is_array()) throw ConfigError(path + ": expected an array, got " + type_name(v));
    return;
  }
  if (!same_kind(reference, v))
    throw ConfigError(path + ": expected " + type_name(reference) + ", got " + type_name(v));
}

inline void check_trap(const json& t) {
  if (!t.is_object()) throw ConfigError("trap: expected an object");
  if (!t.contains("type") || !t.at("type").is_string()) throw ConfigError("trap.type: missing");
  const std::string type = t.at("type");
  const auto it = trap_keys().find(type);
  if (it == trap_keys().end()) throw ConfigError("trap.type: unknown trap '" + type + "'");
  for (const auto& [key, value] : t.items()) {
    if (key == "type") continue;
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
      throw ConfigError("unknown key 'trap." + key + "' for trap type " + type);
    if (!value.is_number()) throw ConfigError("trap." + key + ": expected number");
  }
  for (const auto& key : it->second)
    if (!t.contains(key)) throw ConfigError("trap." + key + ": missing parameter for trap type " + type);
}

inline void merge(json& target, const json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && target.contains(key) && target.at(key).is_object())
      merge(target[key], value);
    else
      target[key] = value;
  }
}

inline double positive(const json& cfg, const std::string& ptr, bool allow_zero = false) {
  const double v = cfg.at(json::json_pointer(ptr)).get<double>();
  if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0))
    throw ConfigError(ptr.substr(1) + ": must be " + (allow_zero ? ">= 0" : "> 0"));
  return v;
}

inline void check_box(const json& cfg, const std::string& ptr) {
  const json& b = cfg.at(json::json_pointer(ptr));
  for (const char* key : {"lower", "upper", "counts"})
    if (!b.at(key).is_array() || b.at(key).size() != 3) throw ConfigError(ptr.substr(1) + "." + key + ": need 3 entries");
  for (int a = 0; a < 3; ++a) {
    if (!b["counts"][a].is_number_integer() || b["counts"][a].get<int>() < 1)
      throw ConfigError(ptr.substr(1) + ".counts: entries must be integers >= 1");
    if (!b["lower"][a].is_number() || !b["upper"][a].is_number() ||
        !(b["upper"][a].get<double>() > b["lower"][a].get<double>()))
      throw ConfigError(ptr.substr(1) + ": upper must exceed lower on every axis");
  }
}

}  // namespace detail

/// Semantic checks on a structurally valid, fully merged config.
inline void validate(const json& cfg) {
  using detail::positive;
  positive(cfg, "/atom/mass_kg");
  positive(cfg, "/atom/energy_J", true);
  positive(cfg, "/beam/xi", true);
  if (!(cfg["beam"]["eta"].get<double>() >= 1.0)) throw ConfigError("beam.eta: must be >= 1");
  for (const char* key : {"k", "delta"})
    if (!std::isfinite(cfg["beam"][key].get<double>())) throw ConfigError(std::string("beam.") + key + ": must be finite");
  detail::check_trap(cfg.at("trap"));
  for (const auto& key : trap_keys().at(cfg["trap"]["type"].get<std::string>())) positive(cfg, "/trap/" + key);
  const double half_width = cfg["geometry"]["overlap_half_width"].get<double>();
  if (!(half_width > 0.0 && half_width < pi / 2)) throw ConfigError("geometry.overlap_half_width: must lie in (0, pi/2)");
  positive(cfg, "/geometry/exclusion_radius");
  detail::check_box(cfg, "/fields/grid");
  detail::check_box(cfg, "/gauge_map/grid");
  detail::check_box(cfg, "/adiabatic/grid");
  positive(cfg, "/gauge_map/h_rel");
  for (const auto& r : cfg["flux"]["radii"])
    if (!r.is_number() || !(r.get<double>() > 0.0)) throw ConfigError("flux.radii: entries must be numbers > 0");
  for (const char* key : {"quadrature_order", "phi_points"})
    if (cfg["flux"][key].get<int>() < 1) throw ConfigError(std::string("flux.") + key + ": must be >= 1");
  positive(cfg, "/holonomy/radius");
  if (cfg["holonomy"]["samples"].get<int>() < 1) throw ConfigError("holonomy.samples: must be >= 1");
  for (const auto& t : cfg["holonomy"]["thetas"])
    if (!t.is_number()) throw ConfigError("holonomy.thetas: entries must be numbers");
  for (const auto& q : cfg["harmonics"]["q"]) {
    if (!q.is_number() || std::abs(2.0 * q.get<double>() - std::round(2.0 * q.get<double>())) > 1e-12)
      throw ConfigError("harmonics.q: entries must be multiples of 1/2");
  }
  for (const char* key : {"theta_points", "phi_points", "quadrature_order", "quadrature_phi_points"})
    if (cfg["harmonics"][key].get<int>() < 1) throw ConfigError(std::string("harmonics.") + key + ": must be >= 1");
  if (cfg["harmonics"]["l_extra"].get<int>() < 0) throw ConfigError("harmonics.l_extra: must be >= 0");
  if (cfg["spectrum"]["m_min"].get<int>() > cfg["spectrum"]["m_max"].get<int>())
    throw ConfigError("spectrum: m_min must not exceed m_max");
  for (const char* key : {"n_rho_max", "n_z_max"})
    if (cfg["spectrum"][key].get<int>() < 0) throw ConfigError(std::string("spectrum.") + key + ": must be >= 0");
  const json& sn = cfg["spectrum_numeric"];
  for (const auto& m : sn["m"])
    if (!m.is_number_integer()) throw ConfigError("spectrum_numeric.m: entries must be integers");
  if (sn["n_eigs"].get<int>() < 1) throw ConfigError("spectrum_numeric.n_eigs: must be >= 1");
  const std::string pot = sn["potential"];
  if (pot != "approx" && pot != "exact") throw ConfigError("spectrum_numeric.potential: must be 'approx' or 'exact'");
  for (const char* key : {"n_rho", "n_z"})
    if (sn["grid"][key].get<int>() < 4) throw ConfigError(std::string("spectrum_numeric.grid.") + key + ": must be >= 4");
  positive(cfg, "/spectrum_numeric/grid/rho_extent");
  positive(cfg, "/spectrum_numeric/grid/z_extent");
  positive(cfg, "/spectrum_numeric/grid/richardson_tolerance", true);
  positive(cfg, "/spectrum_numeric/residual_tolerance");
  if (sn["seed"].get<std::int64_t>() < 0) throw ConfigError("spectrum_numeric.seed: must be >= 0");
  const double crit = cfg["adiabatic"]["criterion"].get<double>();
  if (!(crit > 0.0 && crit <= 1.0)) throw ConfigError("adiabatic.criterion: must lie in (0, 1]");
  positive(cfg, "/adiabatic/r_min");
  for (const auto& d : cfg["adiabatic"]["directions"]) {
    if (!d.is_array() || d.size() != 3) throw ConfigError("adiabatic.directions: each entry needs 3 components");
    double n2 = 0.0;
    for (const auto& c : d) {
      if (!c.is_number()) throw ConfigError("adiabatic.directions: components must be numbers");
      n2 += c.get<double>() * c.get<double>();
    }
    if (!(n2 > 0.0)) throw ConfigError("adiabatic.directions: zero vector");
  }
  if (cfg["paper_repro"]["region_counts"].get<int>() < 1) throw ConfigError("paper_repro.region_counts: must be >= 1");
  positive(cfg, "/paper_repro/ensemble_radius");
  for (const auto& f : cfg["output"]["formats"])
    if (!f.is_string() || (f != "json" && f != "csv")) throw ConfigError("output.formats: entries must be 'json' or 'csv'");
}

/// Applies `key.path=value`; the value is parsed as JSON when possible, else taken as a string.
inline void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  std::string ptr;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("--set: empty path component in '" + key + "'");
    ptr += "/" + part;
  }
  const json::json_pointer jp(ptr);
  if (!cfg.contains(jp.parent_pointer()) || !cfg.at(jp.parent_pointer()).is_object())
    throw ConfigError("--set: unknown key '" + key + "'");
  cfg[jp] = value;
}

/// Defaults, then the user file, then the overrides; the result is checked.
inline json resolve_config(const json& user, const std::vector<std::string>& overrides = {}) {
  json cfg = default_config();
  detail::check_structure(cfg, user, "");
  if (user.contains("trap")) {
    detail::check_trap(user.at("trap"));
    cfg["trap"] = user.at("trap");
  }
  json rest = user;
  rest.erase("trap");
  detail::merge(cfg, rest);
  for (const auto& o : overrides) apply_override(cfg, o);
  detail::check_structure(default_config(), cfg, "");
  validate(cfg);
  return cfg;
}

inline json load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json user = json::parse(in, nullptr, false);
  if (user.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return resolve_config(user, overrides);
}

inline AtomConfig atom_from(const json& cfg) {
  return AtomConfig::from_si(cfg["atom"]["mass_kg"].get<double>(), cfg["atom"]["energy_J"].get<double>());
}

/// With xi_is_amplitude the configured number is sqrt(ξ) and is squared here.
inline BeamConfig beam_from(const json& cfg) {
  const json& b = cfg["beam"];
  BeamConfig beam;
  const double xi = b["xi"].get<double>();
  beam.xi = b["xi_is_amplitude"].get<bool>() ? xi * xi : xi;
  beam.g = b["g"].get<int>();
  beam.eta = b["eta"].get<double>();
  beam.k = b["k"].get<double>();
  beam.delta = b["delta"].get<double>();
  beam.validate();
  return beam;
}

inline TrapConfig trap_from(const json& cfg, const AtomConfig& atom) {
  const json& t = cfg["trap"];
  const std::string type = t["type"];
  if (type == "harmonic") {
    HarmonicTrap h{t["omega"].get<double>(), t["omega_z"].get<double>(), t["z0"].get<double>()};
    h.validate();
    return h;
  }
  if (type == "spherical") {
    const double k = 0.5 * atom.mass_over_hbar * std::pow(t["omega"].get<double>(), 2);
    return SphericalTrap{[k](double r) { return k * r * r; }};
  }
  return NoTrap{};
}

inline const HarmonicTrap& require_harmonic(const TrapConfig& trap, const char* who) {
  if (const auto* h = std::get_if<HarmonicTrap>(&trap)) return *h;
  throw ConfigError(std::string(who) + ": needs trap.type = harmonic");
}

inline GaugeOptions gauge_options_from(const json& cfg) {
  GaugeOptions o;
  o.exclusion_radius = cfg["geometry"]["exclusion_radius"].get<double>();
  o.geometry.overlap_half_width = cfg["geometry"]["overlap_half_width"].get<double>();
  return o;
}

inline CartesianGrid grid_from(const json& b) {
  CartesianGrid g;
  for (int a = 0; a < 3; ++a) {
    g.lower(a) = b["lower"][a].get<double>();
    g.upper(a) = b["upper"][a].get<double>();
    g.counts[a] = b["counts"][a].get<int>();
  }
  return g;
}

/// Fixed-width CSV writer: comment header with the config, then a header row.
class CsvTable {
 public:
  CsvTable(const json& cfg, std::vector<std::string> columns) : columns_(std::move(columns)) {
    out_ << "# format_version: " << format_version << "\n";
    out_ << "# config: " << cfg.dump() << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
    out_ << "\n";
  }

  static std::string number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
  static std::string quoted(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }

  /// Cells are pre-formatted strings; use number() / quoted().
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw std::logic_error("CsvTable: row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }
  std::string str() const { return out_.str(); }

 private:
  std::vector<std::string> columns_;
  std::ostringstream out_;
};

inline std::string json_document(const json& cfg, const std::string& subcommand, json result) {
  json doc{{"format_version", format_version}, {"subcommand", subcommand}, {"config", cfg}, {"result", std::move(result)}};
  return doc.dump(2) + "\n";
}

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

namespace commands {

inline Files fields(const json& cfg) {
  const BeamConfig beam = beam_from(cfg);
  const AtomConfig atom = atom_from(cfg);
  const TrapConfig trap = trap_from(cfg, atom);
  const CartesianGrid grid = grid_from(cfg["fields"]["grid"]);
  FieldOptions fo{cfg["geometry"]["exclusion_radius"].get<double>()};
  std::vector<std::vector<std::string>> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const Position p = grid.cell(i);
    const RabiFields rf = rabi_at(beam, p);
    const EigenFrame f = eigensystem(beam, trap, atom, p, Patch::B, fo);
    rows[i] = {CsvTable::number(p.x), CsvTable::number(p.y), CsvTable::number(p.z),
               CsvTable::number(std::abs(rf.probe)), CsvTable::number(std::abs(rf.control)),
               CsvTable::number(f.e0), CsvTable::number(f.e_plus), CsvTable::number(f.e_minus),
               CsvTable::number(std::min(f.gap_plus, f.gap_minus))};
  });
  CsvTable t(cfg, {"x", "y", "z", "abs_probe", "abs_control", "e0", "e_plus", "e_minus", "gap"});
  for (const auto& r : rows) t.row(r);
  return {{"fields.csv", t.str()}};
}

inline Files gauge_map(const json& cfg) {
  const BeamConfig beam = beam_from(cfg);
  const GaugeOptions go = gauge_options_from(cfg);
  const CartesianGrid grid = grid_from(cfg["gauge_map"]["grid"]);
  const bool kz = cfg["gauge_map"]["include_kz"].get<bool>();
  const bool with_curvature = cfg["gauge_map"]["curvature"].get<bool>();
  NumericDiffOptions nd;
  nd.h_rel = cfg["gauge_map"]["h_rel"].get<double>();
  nd.include_kz = kz;
  std::vector<std::vector<std::vector<std::string>>> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const Position p = grid.cell(i);
    for (Patch patch : {Patch::A, Patch::B}) {
      if (!go.geometry.contains(patch, p.theta())) continue;
      auto emit = [&](const char* kind, const Vec3& a, const Vec3& n) {
        const double rel = (a - n).norm() / std::max(a.norm(), 1e-300);
        rows[i].push_back({CsvTable::number(p.x), CsvTable::number(p.y), CsvTable::number(p.z), to_string(patch), kind,
                           CsvTable::number(a.x()), CsvTable::number(a.y()), CsvTable::number(a.z()),
                           CsvTable::number(n.x()), CsvTable::number(n.y()), CsvTable::number(n.z()),
                           CsvTable::number(rel)});
      };
      try {
        emit("connection", connection_analytic(beam, p, patch, kz, go), connection_numeric(beam, p, patch, nd, go).value);
        if (with_curvature) emit("curvature", curvature(beam, p, go), curvature_numeric(beam, p, patch, 5e-3, nd, go));
      } catch (const PatchBoundary&) {
      } catch (const OnAxisSingular&) {
      } catch (const DegeneratePoint&) {
      }
    }
  });
  CsvTable t(cfg, {"x", "y", "z", "patch", "kind", "ax", "ay", "az", "numeric_ax", "numeric_ay", "numeric_az", "rel_diff"});
  for (const auto& cell : rows)
    for (const auto& r : cell) t.row(r);
  return {{"gauge_map.csv", t.str()}};
}

inline Files flux(const json& cfg) {
  const BeamConfig beam = beam_from(cfg);
  const GaugeOptions go = gauge_options_from(cfg);
  json reports = json::array();
  for (const auto& r : cfg["flux"]["radii"]) {
    const FluxReport rep = monopole_flux(beam, r.get<double>(), cfg["flux"]["quadrature_order"].get<int>(),
                                         cfg["flux"]["phi_points"].get<int>(), go);
    reports.push_back({{"radius", rep.radius}, {"flux", rep.flux}, {"chern", rep.chern},
                       {"quadrature_order", rep.quadrature_order}, {"estimated_error", rep.estimated_error}});
  }
  json result{{"reports", reports},
              {"expected_flux", -2.0 * pi * beam.g / beam.eta},
              {"quantization", to_string(quantization_check(beam.g, beam.eta))}};
  return {{"flux.json", json_document(cfg, "flux", result)}};
}

inline Files holonomy(const json& cfg) {
  const BeamConfig beam = beam_from(cfg);
  const GaugeOptions go = gauge_options_from(cfg);
  json items = json::array();
  for (const auto& th : cfg["holonomy"]["thetas"]) {
    const double value = transition_holonomy(beam, cfg["holonomy"]["radius"].get<double>(), th.get<double>(),
                                             cfg["holonomy"]["samples"].get<int>(), go);
    items.push_back({{"theta", th.get<double>()}, {"holonomy", value}, {"winding", value / (2.0 * pi)}});
  }
  json result{{"items", items},
              {"expected", 2.0 * pi * beam.g / beam.eta},
              {"quantization", to_string(quantization_check(beam.g, beam.eta))}};
  return {{"holonomy.json", json_document(cfg, "holonomy", result)}};
}

inline std::vector<MonopoleQuantum> harmonic_labels(HalfInt q, int l_extra) {
  std::vector<MonopoleQuantum> out;
  for (int i = 0; i <= l_extra; ++i) {
    const HalfInt l = q.abs() + HalfInt::from_int(i);
    for (HalfInt m = -l; m <= l; m = m + HalfInt::from_int(1)) out.push_back({q, l, m});
  }
  return out;
}

inline Files harmonics(const json& cfg) {
  const json& h = cfg["harmonics"];
  const int n_theta = h["theta_points"], n_phi = h["phi_points"];
  const int order = h["quadrature_order"], q_phi = h["quadrature_phi_points"];
  CsvTable values(cfg, {"q", "l", "m", "patch", "theta", "phi", "re", "im"});
  CsvTable gram(cfg, {"q", "l1", "m1", "l2", "m2", "re", "im", "error"});
  const QuadratureRule gl = gauss_legendre(order);
  json summary = json::array();
  for (const auto& qv : h["q"]) {
    const HalfInt q = HalfInt::from_twice(static_cast<int>(std::lround(2.0 * qv.get<double>())));
    const auto labels = harmonic_labels(q, h["l_extra"].get<int>());
    for (const auto& qn : labels)
      for (Patch patch : {Patch::A, Patch::B})
        for (int i = 0; i < n_theta; ++i)
          for (int j = 0; j < n_phi; ++j) {
            const double theta = pi * (i + 0.5) / n_theta, phi = 2.0 * pi * j / n_phi;
            const cplx y = monopole_harmonic(qn, theta, phi, patch);
            values.row({q.str(), qn.l.str(), qn.m.str(), to_string(patch), CsvTable::number(theta),
                        CsvTable::number(phi), CsvTable::number(y.real()), CsvTable::number(y.imag())});
          }
    // table of the labels at all quadrature nodes (cap A; the product is patch independent)
    const std::size_t nl = labels.size(), nodes = static_cast<std::size_t>(order) * q_phi;
    std::vector<std::vector<cplx>> table(nl, std::vector<cplx>(nodes));
    parallel_for(nl, [&](std::size_t a) {
      for (int i = 0; i < order; ++i)
        for (int j = 0; j < q_phi; ++j)
          table[a][static_cast<std::size_t>(i) * q_phi + j] =
              monopole_harmonic(labels[a], std::acos(gl.nodes[i]), 2.0 * pi * j / q_phi, Patch::A);
    });
    double worst = 0.0;
    for (std::size_t a = 0; a < nl; ++a)
      for (std::size_t b = 0; b < nl; ++b) {
        std::vector<double> re(nodes), im(nodes);
        for (int i = 0; i < order; ++i)
          for (int j = 0; j < q_phi; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * q_phi + j;
            const cplx v = std::conj(table[a][k]) * table[b][k] * (gl.weights[i] * 2.0 * pi / q_phi);
            re[k] = v.real();
            im[k] = v.imag();
          }
        const cplx s(pairwise_sum(re), pairwise_sum(im));
        const double err = std::abs(s - (a == b ? 1.0 : 0.0));
        worst = std::max(worst, err);
        gram.row({q.str(), labels[a].l.str(), labels[a].m.str(), labels[b].l.str(), labels[b].m.str(),
                  CsvTable::number(s.real()), CsvTable::number(s.imag()), CsvTable::number(err)});
      }
    summary.push_back({{"q", q.value()}, {"lowest_l", q.abs().value()}, {"labels", nl}, {"max_orthonormality_error", worst}});
  }
  return {{"harmonics.csv", values.str()},
          {"harmonics_gram.csv", gram.str()},
          {"harmonics.json", json_document(cfg, "harmonics", {{"sectors", summary}})}};
}

inline json level_json(const SpectrumResult& r) {
  json j{{"m", r.m}, {"n_rho", r.n_rho}, {"n_z", r.n_z}, {"index", r.index}, {"energy", r.energy},
         {"method", to_string(r.method)}};
  if (r.method == SpectrumMethod::Analytic) {
    j["modified_frequency"] = r.modified_frequency;
    j["frequency_shift"] = r.frequency_shift;
    j["zero_point_shift"] = r.zero_point_shift;
  }
  if (r.grid) {
    const GridMetadata& g = *r.grid;
    j["grid"] = {{"n_rho", g.n_rho}, {"n_z", g.n_z}, {"rho_max", g.rho_max}, {"z_min", g.z_min},
                 {"z_max", g.z_max}, {"h_rho", g.h_rho}, {"h_z", g.h_z}, {"shift", g.shift},
                 {"residual", g.residual}, {"operator_calls", g.operator_calls}};
    if (!std::isnan(g.richardson)) j["grid"]["richardson"] = g.richardson;
  }
  return j;
}

inline Files spectrum_analytic_cmd(const json& cfg) {
  const AtomConfig atom = atom_from(cfg);
  const HarmonicTrap trap = require_harmonic(trap_from(cfg, atom), "spectrum-analytic");
  const int g = beam_from(cfg).g;
  const json& s = cfg["spectrum"];
  json levels = json::array();
  for (int m = s["m_min"]; m <= s["m_max"].get<int>(); ++m)
    for (int nr = 0; nr <= s["n_rho_max"].get<int>(); ++nr)
      for (int nz = 0; nz <= s["n_z_max"].get<int>(); ++nz) levels.push_back(level_json(spectrum_analytic({atom, trap, g, m, nr, nz})));
  json result{{"levels", levels},
              {"modified_frequency", modified_frequency(atom, trap, g)},
              {"frequency_shift", modified_frequency(atom, trap, g) - trap.omega},
              {"zero_point_shift_per_m", -static_cast<double>(g) / (4.0 * atom.mass_over_hbar * trap.z0 * trap.z0)}};
  return {{"spectrum_analytic.json", json_document(cfg, "spectrum-analytic", result)}};
}

inline Files spectrum_numeric_cmd(const json& cfg) {
  const AtomConfig atom = atom_from(cfg);
  const TrapConfig trap = trap_from(cfg, atom);
  const HarmonicTrap& h = require_harmonic(trap, "spectrum-numeric");
  const int g = beam_from(cfg).g;
  const json& sn = cfg["spectrum_numeric"];
  GridSpec spec;
  spec.n_rho = sn["grid"]["n_rho"];
  spec.n_z = sn["grid"]["n_z"];
  spec.rho_extent = sn["grid"]["rho_extent"];
  spec.z_extent = sn["grid"]["z_extent"];
  spec.richardson_tolerance = sn["grid"]["richardson_tolerance"];
  SpectrumSolverOptions opts;
  opts.residual_tolerance = sn["residual_tolerance"];
  opts.eigensolver.seed = sn["seed"].get<std::uint64_t>();
  const RadialPotential pot = sn["potential"] == "exact" ? RadialPotential::ExactF : RadialPotential::ApproxF;
  const int n_eigs = sn["n_eigs"];
  const std::vector<int> ms = sn["m"].get<std::vector<int>>();
  std::vector<json> sectors(ms.size());
  parallel_for(ms.size(), [&](std::size_t i) {
    const auto numeric = spectrum_numeric(ms[i], {atom, trap, g}, pot, spec, n_eigs, opts);
    const auto analytic = analytic_sector_levels(atom, h, g, ms[i], n_eigs);
    json levels = json::array();
    for (int k = 0; k < n_eigs; ++k) {
      json l = level_json(numeric[k]);
      l["analytic_energy"] = analytic[k].energy;
      l["analytic_label"] = {{"n_rho", analytic[k].n_rho}, {"n_z", analytic[k].n_z}};
      l["delta"] = numeric[k].energy - analytic[k].energy;
      l["relative_delta"] = (numeric[k].energy - analytic[k].energy) / analytic[k].energy;
      levels.push_back(l);
    }
    sectors[i] = {{"m", ms[i]}, {"levels", levels}};
  });
  json result{{"sectors", sectors}, {"potential", sn["potential"]}};
  return {{"spectrum_numeric.json", json_document(cfg, "spectrum-numeric", result)}};
}

inline Files adiabatic_cmd(const json& cfg) {
  const BeamConfig beam = beam_from(cfg);
  const AtomConfig atom = atom_from(cfg);
  const json& a = cfg["adiabatic"];
  const double crit = a["criterion"];
  json thresholds = json::array();
  for (const auto& d : a["directions"]) {
    const Vec3 dir(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
    thresholds.push_back({{"direction", vec_json(dir)},
                          {"threshold_radius", threshold_radius(beam, atom, dir, crit, a["r_min"].get<double>())}});
  }
  const RegionMap map = region_map(beam, atom, grid_from(a["grid"]), crit);
  CsvTable t(cfg, {"x", "y", "z", "lhs", "rhs", "ratio", "valid"});
  for (const auto& c : map.cells)
    t.row({CsvTable::number(c.position.x), CsvTable::number(c.position.y), CsvTable::number(c.position.z),
           CsvTable::number(c.lhs), CsvTable::number(c.rhs), CsvTable::number(c.ratio), c.valid ? "1" : "0"});
  json result{{"thresholds", thresholds}, {"criterion", crit}, {"valid_fraction", map.valid_fraction},
              {"beam_xi_model", beam.xi}};
  return {{"adiabatic.json", json_document(cfg, "adiabatic", result)}, {"adiabatic_region.csv", t.str()}};
}

/// "reproduced" within half a decade of the claim, "order-of-magnitude" within
/// one decade, else "discrepant".
inline std::string magnitude_verdict(double computed, double claimed) {
  if (!(computed > 0.0) || !(claimed > 0.0)) return "discrepant";
  const double d = std::abs(std::log10(computed / claimed));
  if (d <= 0.5) return "reproduced";
  if (d <= 1.0) return "order-of-magnitude";
  return "discrepant";
}

/// Inputs of the two cesium case studies.
struct CaseStudies {
  double mass_kg = 2.2069466e-25;
  double energy_J = 1e-26;
  double xi_amplitude = pi * 1e10;  // sqrt(ξ), rad·s⁻¹·m^{-1/2}
  int g1 = 10;
  int g2 = 10000;
  double z0 = 1e-3;
  double omega = 1e2;
  double omega_z = 1e6;
};

inline Files paper_repro(const json& cfg) {
  const CaseStudies cs;
  const AtomConfig atom = AtomConfig::from_si(cs.mass_kg, cs.energy_J);
  BeamConfig beam1{cs.xi_amplitude * cs.xi_amplitude, cs.g1, 1.0, 0.0, 0.0};
  BeamConfig literal = beam1;
  literal.xi = cs.xi_amplitude;

  json items = json::array();
  auto item = [&](const std::string& id, const std::string& quantity, double computed, double claimed,
                  const std::string& unit, const std::string& verdict, const std::string& note) {
    items.push_back({{"id", id}, {"quantity", quantity}, {"computed", computed}, {"claimed", claimed},
                     {"unit", unit}, {"verdict", verdict}, {"note", note}});
  };

  // case 1: threshold radius, worst direction (the equatorial plane has the weakest drive)
  const std::vector<Vec3> dirs{Vec3(1, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(1, 1, 1)};
  json per_dir = json::array();
  double worst = 0.0, worst_literal = 0.0;
  for (const Vec3& d : dirs) {
    const double r = threshold_radius(beam1, atom, d);
    const double rl = threshold_radius(literal, atom, d);
    worst = std::max(worst, r);
    worst_literal = std::max(worst_literal, rl);
    per_dir.push_back({{"direction", vec_json(d)}, {"threshold_radius", r}, {"threshold_radius_literal_xi", rl}});
  }
  item("case1_threshold_radius", "adiabatic threshold radius, g = 10, xi = (pi 1e10)^2", worst, 1e-6, "m",
       magnitude_verdict(worst, 1e-6), "largest over the sampled directions; xi taken as the square of the quoted amplitude");
  item("case1_threshold_radius_literal_xi", "adiabatic threshold radius with xi = pi 1e10 taken literally",
       worst_literal, 1e-6, "m", magnitude_verdict(worst_literal, 1e-6),
       "alternative reading of the xi unit, reported for comparison only");

  // case 1: fraction of an ensemble-sized box that is adiabatic
  const double half = cfg["paper_repro"]["ensemble_radius"];
  const int n = cfg["paper_repro"]["region_counts"];
  const RegionMap map = region_map(beam1, atom, {Vec3::Constant(-half), Vec3::Constant(half), {n, n, n}});
  item("case1_ensemble_valid_fraction", "adiabatic fraction of the ensemble box", map.valid_fraction, 0.99, "1",
       map.valid_fraction >= 0.99 ? "reproduced" : "discrepant", "cube of half-width ensemble_radius, cell-centred samples");

  // case 2: harmonic trap around (0, 0, z0) with g = 1e4
  const HarmonicTrap trap{cs.omega, cs.omega_z, cs.z0};
  BeamConfig beam2 = beam1;
  beam2.g = cs.g2;
  const AdiabaticReport centre = adiabatic_report(beam2, atom, {0.0, 0.0, cs.z0});
  item("case2_adiabatic_ratio_at_trap_centre", "coupling-to-gap ratio at (0, 0, z0)", centre.ratio, 1.0, "1",
       centre.ratio <= 0.1 ? "reproduced" : (centre.ratio <= 1.0 ? "order-of-magnitude" : "discrepant"),
       "the condition requires the ratio to be well below 1");
  const SpectrumResult s1 = spectrum_analytic({atom, trap, cs.g2, 1, 0, 0});
  const double zp = std::abs(s1.zero_point_shift);
  item("case2_zero_point_shift", "|m g / (4 M z0^2)| for |m| = 1", zp, 10.0, "rad/s", magnitude_verdict(zp, 10.0),
       "frequencies treated as angular; the value scales linearly with m");
  item("case2_frequency_shift", "modified frequency minus trap frequency", s1.frequency_shift, cs.omega, "rad/s",
       magnitude_verdict(s1.frequency_shift, cs.omega),
       "the shift is quadratic in g/(4 M z0^2 omega), which is small for these inputs");

  json result{{"items", items},
              {"case1",
               {{"mass_kg", cs.mass_kg}, {"energy_J", cs.energy_J}, {"xi_amplitude", cs.xi_amplitude},
                {"xi_model", beam1.xi}, {"g", cs.g1}, {"thresholds", per_dir},
                {"ensemble_half_width", half}, {"region_counts", n}}},
              {"case2",
               {{"g", cs.g2}, {"z0", cs.z0}, {"omega", cs.omega}, {"omega_z", cs.omega_z},
                {"modified_frequency", s1.modified_frequency}, {"frequency_shift", s1.frequency_shift},
                {"zero_point_shift_m1", s1.zero_point_shift}, {"ratio_at_centre", centre.ratio}}}};
  return {{"paper_repro.json", json_document(cfg, "paper-repro", result)}};
}

}  // namespace commands

/// Computes every output file of `subcommand` in memory.
inline Files run_subcommand(const std::string& subcommand, const json& cfg) {
  Files files;
  if (subcommand == "fields") files = commands::fields(cfg);
  else if (subcommand == "gauge-map") files = commands::gauge_map(cfg);
  else if (subcommand == "flux") files = commands::flux(cfg);
  else if (subcommand == "holonomy") files = commands::holonomy(cfg);
  else if (subcommand == "harmonics") files = commands::harmonics(cfg);
  else if (subcommand == "spectrum-analytic") files = commands::spectrum_analytic_cmd(cfg);
  else if (subcommand == "spectrum-numeric") files = commands::spectrum_numeric_cmd(cfg);
  else if (subcommand == "adiabatic") files = commands::adiabatic_cmd(cfg);
  else if (subcommand == "paper-repro") files = commands::paper_repro(cfg);
  else throw ConfigError("unknown subcommand '" + subcommand + "'");
  Files kept;
  for (auto& [name, body] : files) {
    const std::string ext = name.substr(name.rfind('.') + 1);
    for (const auto& f : cfg["output"]["formats"])
      if (f == ext) kept[name] = std::move(body);
  }
  return kept;
}

inline void write_files(const Files& files, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  for (const auto& [name, body] : files) {
    std::ofstream out(dir / name, std::ios::binary);
    out << body;
    if (!out) throw ConfigError("cannot write '" + (dir / name).string() + "'");
  }
}

/// Maps library errors onto exit codes.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const json::exception*>(&e)) return ConfigFailure;
  if (dynamic_cast<const NonConverged*>(&e) || dynamic_cast<const GridTooCoarse*>(&e) ||
      dynamic_cast<const IndefiniteShift*>(&e))
    return NumericalFailure;
  if (dynamic_cast<const Error*>(&e)) return PhysicsFailure;
  return ConfigFailure;
}

inline int run(int argc, char** argv, std::ostream& log = std::cerr) {
  CLI::App app{"Artificial monopole fields of a trapped three-level atom"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, summary(name));
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--set", overrides, "override a dot-path key, e.g. beam.g=5")->take_all();
    sub->add_option("--out", out_dir, "output directory (default: output.directory)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ConfigFailure;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    const json cfg = load_config(config_path, overrides);
    const Files files = run_subcommand(subcommand, cfg);
    const std::filesystem::path dir = out_dir.empty() ? cfg["output"]["directory"].get<std::string>() : out_dir;
    write_files(files, dir);
    for (const auto& [name, body] : files) log << (dir / name).string() << "\n";
    return Ok;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    log << "error: " << e.what() << "\n";
    return code;
  }
}

}  // namespace monopole::cli
