#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../chaometrics.hpp"
#include "../core.hpp"
#include "../hamiltonians.hpp"
#include "../states.hpp"

namespace krylovchaos::harness {

enum class ModelKind { ising, banded, goe };

enum class FamilyKind { all_up, uniform, random, eigenstates, border };

/// One initial-state family of a sweep.
///
/// `ref` selects the reference Hamiltonian whose eigenbasis defines the
/// states (h_z for the Ising chain, k for the banded model). Without a ref,
/// uniform and eigenstate families use the Hamiltonian being evolved.
struct FamilySpec {
  FamilyKind kind = FamilyKind::all_up;
  std::optional<double> ref;
  int count = 1;
  std::string name;
};

struct SweepConfig {
  ModelKind model = ModelKind::ising;

  int n_spins = 10;
  Sector sector = Sector::even;
  int n_eta = 0;  // 0: same as n_spins

  int dim = 256;
  double bandwidth_frac = 0.2;
  int realizations = 5;

  std::vector<double> param_grid;
  std::vector<FamilySpec> families;
  std::uint64_t seed = 1;
  DispersionConfig dispersion;
  bool allow_degenerate = false;
  int threads = 1;
  std::string out_dir = ".";

  // Single-point subcommands.
  double h_z = 1.02;
  double k = 0.125;
  int j = 10;
  TildeProfile profile = UniformComplement{};
  std::vector<double> deltas;
  std::string state = "all_up";
  double delta = 0.1;

  int eta_spins() const { return n_eta > 0 ? n_eta : n_spins; }
  int bandwidth() const { return bandwidth_from_fraction(dim, bandwidth_frac); }
};

inline std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::ising: return "ising";
    case ModelKind::banded: return "banded";
    case ModelKind::goe: return "goe";
  }
  return "?";
}

inline std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::all_up: return "all_up";
    case FamilyKind::uniform: return "uniform";
    case FamilyKind::random: return "random";
    case FamilyKind::eigenstates: return "eigenstates";
    case FamilyKind::border: return "border";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Value parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    throw ArgumentError("config key '" + key + "': expected a finite number, got '" + v + "'");
  return out;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ArgumentError("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ArgumentError("config key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) {
    if (item.empty()) continue;
    out.push_back(parse_double(key, item));
  }
  return out;
}

/// Compact token for a reference parameter inside a column name.
inline std::string param_token(double x) {
  std::ostringstream os;
  os << x;
  std::string s = os.str();
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
    if (c == '+') c = 'P';
  }
  return s;
}

}  // namespace detail

inline std::string default_family_name(const FamilySpec& f) {
  const std::string ref = f.ref ? "_ref" + detail::param_token(*f.ref) : "";
  switch (f.kind) {
    case FamilyKind::all_up: return "up";
    case FamilyKind::uniform: return "unif" + ref;
    case FamilyKind::random: return "rand";
    case FamilyKind::eigenstates: return "eig" + ref;
    case FamilyKind::border: return "border" + ref;
  }
  return "fam";
}

/// Parses `kind[:key=value]...`, e.g. `eigenstates:ref=4:count=40`.
inline FamilySpec parse_family(const std::string& text) {
  const auto parts = detail::split(text, ':');
  FamilySpec f;
  const auto& kind = parts.front();
  if (kind == "all_up") f.kind = FamilyKind::all_up;
  else if (kind == "uniform") f.kind = FamilyKind::uniform;
  else if (kind == "random") f.kind = FamilyKind::random, f.count = 10;
  else if (kind == "eigenstates") f.kind = FamilyKind::eigenstates, f.count = 40;
  else if (kind == "border") f.kind = FamilyKind::border;
  else
    throw ArgumentError("unknown state family '" + kind +
                        "' (valid: all_up, uniform, random, eigenstates, border)");
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) throw ArgumentError("family option '" + parts[i] + "' must be key=value");
    const auto key = detail::trim(parts[i].substr(0, eq));
    const auto val = detail::trim(parts[i].substr(eq + 1));
    if (key == "ref") f.ref = detail::parse_double("families", val);
    else if (key == "count") f.count = detail::parse_int<int>("families", val);
    else if (key == "name") f.name = val;
    else throw ArgumentError("unknown family option '" + key + "' (valid: ref, count, name)");
  }
  require(f.count >= 1, "family count must be >= 1");
  if (f.name.empty()) f.name = default_family_name(f);
  return f;
}

inline std::vector<FamilySpec> parse_families(const std::string& text) {
  std::vector<FamilySpec> out;
  for (const auto& item : detail::split(text, ',')) {
    if (item.empty()) continue;
    out.push_back(parse_family(item));
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t k = i + 1; k < out.size(); ++k)
      if (out[i].name == out[k].name) throw ArgumentError("duplicate family name '" + out[i].name + "'");
  return out;
}

inline std::string format_family(const FamilySpec& f) {
  std::ostringstream os;
  os << to_string(f.kind);
  if (f.ref) os << ":ref=" << *f.ref;
  if (f.kind == FamilyKind::random || f.kind == FamilyKind::eigenstates) os << ":count=" << f.count;
  if (f.name != default_family_name(f)) os << ":name=" << f.name;
  return os.str();
}

/// `gaussian:<center>:<sigma>` or `uniform`.
inline TildeProfile parse_profile(const std::string& text) {
  const auto parts = detail::split(text, ':');
  if (parts[0] == "uniform" && parts.size() == 1) return UniformComplement{};
  if (parts[0] == "gaussian" && parts.size() == 3)
    return GaussianProfile{detail::parse_double("profile", parts[1]), detail::parse_double("profile", parts[2])};
  throw ArgumentError("profile must be 'uniform' or 'gaussian:<center>:<sigma>', got '" + text + "'");
}

inline std::string format_profile(const TildeProfile& p) {
  if (const auto* g = std::get_if<GaussianProfile>(&p)) {
    std::ostringstream os;
    os << "gaussian:" << g->center << ':' << g->sigma;
    return os.str();
  }
  return "uniform";
}

// ---------------------------------------------------------------------------
// Grids and defaults
// ---------------------------------------------------------------------------

inline std::vector<double> log_grid(double lo, double hi, int points) {
  require(points >= 1, "grid needs at least one point");
  require(lo > 0.0 && hi >= lo, "log grid needs 0 < min <= max");
  std::vector<double> g;
  for (int i = 0; i < points; ++i)
    g.push_back(points == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  return g;
}

inline std::vector<double> linear_grid(double lo, double hi, int points) {
  require(points >= 1 && hi >= lo, "bad linear grid");
  std::vector<double> g;
  for (int i = 0; i < points; ++i)
    g.push_back(points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (points - 1));
  return g;
}

inline std::vector<double> default_ising_grid() { return log_grid(0.05, 4.0, 30); }
inline std::vector<double> default_banded_grid() { return log_grid(5e-4, 2.0, 20); }

inline std::vector<FamilySpec> default_families(ModelKind model) {
  if (model == ModelKind::ising)
    return parse_families(
        "all_up, uniform, uniform:ref=0, random:count=10, eigenstates:ref=4:count=40, "
        "eigenstates:ref=0:count=40");
  return parse_families("border:ref=0, uniform:ref=0, random:count=10, eigenstates:ref=0:count=20");
}

/// Fills the grid and families when the configuration left them empty.
inline void apply_defaults(SweepConfig& cfg) {
  if (cfg.param_grid.empty())
    cfg.param_grid = cfg.model == ModelKind::ising ? default_ising_grid() : default_banded_grid();
  if (cfg.families.empty()) cfg.families = default_families(cfg.model);
  if (cfg.deltas.empty()) cfg.deltas = {0.01, 0.02, 0.05, 0.1};
}

inline void validate(const SweepConfig& cfg) {
  require(!cfg.param_grid.empty(), "parameter grid is empty");
  for (double p : cfg.param_grid) require(std::isfinite(p), "parameter grid has a non-finite value");
  cfg.dispersion.validate();
  require(cfg.threads >= 1, "threads must be >= 1");
  require(cfg.realizations >= 1, "realizations must be >= 1");
  if (cfg.model == ModelKind::ising) {
    require(cfg.n_spins >= 2, "n_spins must be >= 2 for a sweep");
    require(cfg.sector != Sector::full || cfg.n_spins <= kMaxIsingSpins, "n_spins too large");
  } else {
    require(cfg.dim >= 3, "dim must be >= 3");
  }
}

// ---------------------------------------------------------------------------
// Flat key = value configuration files
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "model",        "n_spins",  "sector",     "n_eta",       "dim",         "bandwidth_frac",
      "realizations", "param_min", "param_max", "param_points", "param_spacing", "param_values",
      "families",     "seed",     "w_frac",     "n0_frac",     "allow_degenerate", "threads",
      "out_dir",      "h_z",      "k",          "j",           "profile",     "deltas",
      "state",        "delta"};
  return keys;
}

inline const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> keys = {"model"};
  return keys;
}

inline ModelKind parse_model(const std::string& v) {
  if (v == "ising") return ModelKind::ising;
  if (v == "banded") return ModelKind::banded;
  if (v == "goe") return ModelKind::goe;
  throw ArgumentError("model must be ising, banded or goe, got '" + v + "'");
}

inline Sector parse_sector(const std::string& v) {
  if (v == "even") return Sector::even;
  if (v == "odd") return Sector::odd;
  if (v == "full") return Sector::full;
  throw ArgumentError("sector must be even, odd or full, got '" + v + "'");
}

/// Applies one key to a configuration (shared by the file parser and CLI).
inline void set_config_value(SweepConfig& cfg, const std::string& key, const std::string& v,
                             std::map<std::string, std::string>& grid_keys) {
  using namespace detail;
  if (key == "model") cfg.model = parse_model(v);
  else if (key == "n_spins") cfg.n_spins = parse_int<int>(key, v);
  else if (key == "sector") cfg.sector = parse_sector(v);
  else if (key == "n_eta") cfg.n_eta = parse_int<int>(key, v);
  else if (key == "dim") cfg.dim = parse_int<int>(key, v);
  else if (key == "bandwidth_frac") cfg.bandwidth_frac = parse_double(key, v);
  else if (key == "realizations") cfg.realizations = parse_int<int>(key, v);
  else if (key == "param_min" || key == "param_max" || key == "param_points" || key == "param_spacing")
    grid_keys[key] = v;
  else if (key == "param_values") cfg.param_grid = parse_list(key, v);
  else if (key == "families") cfg.families = parse_families(v);
  else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(key, v);
  else if (key == "w_frac") cfg.dispersion.w_frac = parse_double(key, v);
  else if (key == "n0_frac") cfg.dispersion.n0_frac = parse_double(key, v);
  else if (key == "allow_degenerate") cfg.allow_degenerate = parse_bool(key, v);
  else if (key == "threads") cfg.threads = parse_int<int>(key, v);
  else if (key == "out_dir") cfg.out_dir = v;
  else if (key == "h_z") cfg.h_z = parse_double(key, v);
  else if (key == "k") cfg.k = parse_double(key, v);
  else if (key == "j") cfg.j = parse_int<int>(key, v);
  else if (key == "profile") cfg.profile = parse_profile(v);
  else if (key == "deltas") cfg.deltas = parse_list(key, v);
  else if (key == "state") cfg.state = v;
  else if (key == "delta") cfg.delta = parse_double(key, v);
  else {
    std::string valid;
    for (const auto& k : config_keys()) valid += (valid.empty() ? "" : ", ") + k;
    throw ArgumentError("unknown config key '" + key + "'; valid keys: " + valid);
  }
}

/// Builds the parameter grid from param_min/max/points/spacing if present.
inline void resolve_grid_keys(SweepConfig& cfg, const std::map<std::string, std::string>& g) {
  if (g.empty()) return;
  for (const char* k : {"param_min", "param_max", "param_points"})
    if (!g.count(k)) throw ArgumentError(std::string("missing required key '") + k + "' for the grid");
  const double lo = detail::parse_double("param_min", g.at("param_min"));
  const double hi = detail::parse_double("param_max", g.at("param_max"));
  const int n = detail::parse_int<int>("param_points", g.at("param_points"));
  const std::string spacing = g.count("param_spacing") ? g.at("param_spacing") : "log";
  if (spacing == "log") cfg.param_grid = log_grid(lo, hi, n);
  else if (spacing == "linear") cfg.param_grid = linear_grid(lo, hi, n);
  else throw ArgumentError("param_spacing must be log or linear");
}

/// Parses config text on top of `base` (defaults for keys left unset).
inline SweepConfig parse_config_text(const std::string& text, SweepConfig base = {}) {
  SweepConfig cfg = std::move(base);
  std::map<std::string, std::string> grid_keys;
  std::map<std::string, bool> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto val = detail::trim(line.substr(eq + 1));
    set_config_value(cfg, key, val, grid_keys);
    seen[key] = true;
  }
  for (const auto& k : required_config_keys())
    if (!seen.count(k)) throw ArgumentError("config is missing required key '" + k + "'");
  resolve_grid_keys(cfg, grid_keys);
  return cfg;
}

inline SweepConfig parse_config(const std::string& path, SweepConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

namespace detail {

/// Shortest text that parses back to exactly `x`.
inline std::string exact_number(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Serializes the effective configuration in the same key = value format.
inline std::string to_config_text(const SweepConfig& cfg) {
  using detail::exact_number;
  std::ostringstream os;
  os << "model = " << to_string(cfg.model) << '\n';
  if (cfg.model == ModelKind::ising) {
    os << "n_spins = " << cfg.n_spins << '\n'
       << "sector = " << to_string(cfg.sector) << '\n'
       << "n_eta = " << cfg.eta_spins() << '\n';
  } else {
    os << "dim = " << cfg.dim << '\n' << "bandwidth_frac = " << exact_number(cfg.bandwidth_frac) << '\n'
       << "realizations = " << cfg.realizations << '\n';
  }
  os << "param_values = ";
  for (std::size_t i = 0; i < cfg.param_grid.size(); ++i) os << (i ? ", " : "") << exact_number(cfg.param_grid[i]);
  os << "\nfamilies = ";
  for (std::size_t i = 0; i < cfg.families.size(); ++i) os << (i ? ", " : "") << format_family(cfg.families[i]);
  os << "\nseed = " << cfg.seed << '\n'
     << "w_frac = " << exact_number(cfg.dispersion.w_frac) << '\n'
     << "n0_frac = " << exact_number(cfg.dispersion.n0_frac) << '\n'
     << "allow_degenerate = " << (cfg.allow_degenerate ? "true" : "false") << '\n'
     << "h_z = " << exact_number(cfg.h_z) << '\n'
     << "k = " << exact_number(cfg.k) << '\n'
     << "j = " << cfg.j << '\n'
     << "profile = " << format_profile(cfg.profile) << '\n'
     << "state = " << cfg.state << '\n'
     << "delta = " << exact_number(cfg.delta) << '\n'
     << "deltas = ";
  for (std::size_t i = 0; i < cfg.deltas.size(); ++i) os << (i ? ", " : "") << exact_number(cfg.deltas[i]);
  os << '\n';
  return os.str();
}

}  // namespace krylovchaos::harness
