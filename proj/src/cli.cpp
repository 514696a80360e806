#include "rsi/cli.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "rsi/forward.hpp"
#include "rsi/parallel.hpp"

namespace fs = std::filesystem;

namespace rsi {
namespace {

// 17 significant digits: lossless double round-trip.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Short form used in file names (k values are small round numbers).
std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
    ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
    --e;
  return s.substr(b, e - b);
}

// Split on whitespace and commas, dropping empty tokens.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur += c;
    }
  }
  if (!cur.empty())
    out.push_back(cur);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int round_up_even(double v) {
  int n = static_cast<int>(std::ceil(v));
  if (n % 2 != 0)
    ++n;
  return n;
}

double parse_plain_double(const std::string& tok, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos == tok.size() && std::isfinite(v))
      return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(context + ": expected a number, got '" + tok + "'");
}

std::string join(const std::vector<std::string>& parts,
                 const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i)
      out += sep;
    out += parts[i];
  }
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Config store

Config Config::parse(std::istream& is) {
  Config cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';')
      continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unterminated section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": empty section name");
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    if (!section.empty())
      key = section + "." + key;
    if (cfg.kv_.count(key))
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    cfg.kv_[key] = value;
  }
  return cfg;
}

Config Config::parse_string(const std::string& text) {
  std::istringstream is(text);
  return parse(is);
}

Config Config::load(const std::string& path) {
  std::ifstream is(path);
  if (!is)
    throw ConfigError("cannot read config file '" + path + "'");
  return parse(is);
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

std::string Config::get_string(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end())
    throw ConfigError("missing required key '" + key + "'");
  read_.insert(key);
  return it->second;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  return parse_plain_double(get_string(key), "key '" + key + "'");
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const long n = std::stol(v, &pos);
    if (pos == v.size() && n >= INT_MIN && n <= INT_MAX)
      return static_cast<int>(n);
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
}

int Config::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_uint64(const std::string& key,
                                 std::uint64_t fallback) const {
  if (!has(key))
    return fallback;
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const unsigned long long n = std::stoull(v, &pos);
    if (pos == v.size() && v.find('-') == std::string::npos)
      return static_cast<std::uint64_t>(n);
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" +
                    v + "'");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key))
    return fallback;
  std::string v = get_string(key);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on")
    return true;
  if (v == "false" || v == "0" || v == "no" || v == "off")
    return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

double Config::get_angle(const std::string& key, double fallback) const {
  if (!has(key))
    return fallback;
  return parse_angle(get_string(key), "key '" + key + "'");
}

std::vector<double> Config::get_reals(const std::string& key) const {
  const std::vector<std::string> toks = split_list(get_string(key));
  std::vector<double> out;
  out.reserve(toks.size());
  for (const std::string& t : toks)
    out.push_back(parse_angle(t, "key '" + key + "'"));
  return out;
}

std::vector<std::vector<double>> Config::get_angle_groups(
    const std::string& key) const {
  const std::string raw = get_string(key);
  std::vector<std::vector<double>> groups;
  for (const std::string& part : split_on(raw, ';')) {
    std::vector<double> group;
    for (const std::string& t : split_list(part))
      group.push_back(parse_angle(t, "key '" + key + "'"));
    if (group.empty())
      throw ConfigError("key '" + key + "': empty angle group in '" + raw +
                        "'");
    groups.push_back(std::move(group));
  }
  return groups;
}

std::vector<std::string> Config::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_)
    if (!read_.count(k))
      out.push_back(k);
  return out;
}

double parse_angle(const std::string& token, const std::string& context) {
  std::string t = trim(token);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  double sign = 1.0;
  if (!t.empty() && (t[0] == '+' || t[0] == '-')) {
    if (t[0] == '-')
      sign = -1.0;
    t = t.substr(1);
  }
  const std::size_t p = t.find("pi");
  if (p == std::string::npos)
    return sign * parse_plain_double(t, context);
  std::string coef_s = t.substr(0, p);
  if (!coef_s.empty() && coef_s.back() == '*')
    coef_s.pop_back();
  const double coef =
      coef_s.empty() ? 1.0 : parse_plain_double(coef_s, context);
  const std::string rest = t.substr(p + 2);
  double div = 1.0;
  if (!rest.empty()) {
    if (rest[0] != '/')
      throw ConfigError(context + ": malformed angle '" + token + "'");
    div = parse_plain_double(rest.substr(1), context);
    if (div == 0.0)
      throw ConfigError(context + ": division by zero in '" + token + "'");
  }
  return sign * coef * kPi / div;
}

// ---------------------------------------------------------------------------
// Modes and scenarios

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::forward:
      return "forward";
    case Mode::synth:
      return "synth";
    case Mode::invert_far:
      return "invert-far";
    case Mode::invert_near:
      return "invert-near";
    case Mode::verify:
      return "verify";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "forward")
    return Mode::forward;
  if (s == "synth")
    return Mode::synth;
  if (s == "invert-far")
    return Mode::invert_far;
  if (s == "invert-near")
    return Mode::invert_near;
  if (s == "verify")
    return Mode::verify;
  throw ConfigError("unknown mode '" + s +
                    "' (expected forward | synth | invert-far | invert-near "
                    "| verify)");
}

SurfaceProfile Scenario::make_profile() const {
  try {
    if (profile_kind == "none")
      throw std::invalid_argument("scenario carries no truth profile");
    if (profile_kind == "spline") {
      const SplineBasis basis(static_cast<int>(profile_coeffs.size()),
                              profile_R);
      return spline_profile(basis, profile_coeffs);
    }
    if (profile_kind == "piecewise")
      return piecewise_profile(profile_vertices);
    return preset_profile(profile_kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }
}

namespace {

void check_thetas(const std::vector<double>& group, const std::string& key) {
  try {
    IncidentConfig probe(1.0, group);
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

std::vector<double> ascending_ks_from(const Config& cfg,
                                      const std::string& key) {
  std::vector<double> ks = cfg.get_reals(key);
  if (ks.empty())
    throw ConfigError("key '" + key + "': empty wavenumber list");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!(ks[i] > 0.0))
      throw ConfigError("key '" + key + "': wavenumbers must be positive");
    if (i > 0 && !(ks[i] > ks[i - 1]))
      throw ConfigError("key '" + key +
                        "': wavenumbers must be strictly ascending");
  }
  return ks;
}

} // namespace

Scenario scenario_from_config(const Config& cfg, Mode mode) {
  Scenario sc;
  sc.mode = mode;

  if (cfg.has("mode")) {
    const std::string s = cfg.get_string("mode");
    if (mode_from_string(s) != mode)
      throw ConfigError("key 'mode': config says '" + s +
                        "' but the command line requested '" +
                        to_string(mode) + "'");
  }
  cfg.get_string("version", kCliVersion); // provenance only

  const bool is_invert = mode == Mode::invert_far || mode == Mode::invert_near;
  sc.data_dir = is_invert ? cfg.get_string("data.dir", "") : "";
  const bool synthesizes =
      mode == Mode::forward || mode == Mode::synth ||
      (is_invert && sc.data_dir.empty());

  sc.R = cfg.get_double("geometry.R", mode == Mode::verify ? 2.5 : 1.0);
  if (!(sc.R > 0.0))
    throw ConfigError("key 'geometry.R': truncation radius must be positive");

  // Truth profile.
  if (mode == Mode::verify)
    sc.profile_kind = cfg.get_string("profile.kind", "example1");
  else if (synthesizes)
    sc.profile_kind = cfg.get_string("profile.kind");
  else
    sc.profile_kind = cfg.get_string("profile.kind", "none");
  if (sc.profile_kind == "spline") {
    sc.profile_R = cfg.get_double("profile.R", sc.R);
    const std::vector<double> a = cfg.get_reals("profile.coeffs");
    if (a.empty())
      throw ConfigError("key 'profile.coeffs': empty coefficient list");
    sc.profile_coeffs =
        Eigen::Map<const RealVector>(a.data(), static_cast<int>(a.size()));
    if (cfg.has("profile.M") &&
        cfg.get_int("profile.M") != static_cast<int>(a.size()))
      throw ConfigError(
          "key 'profile.M': does not match the profile.coeffs count");
  } else if (sc.profile_kind == "piecewise") {
    const std::vector<double> v = cfg.get_reals("profile.vertices");
    if (v.size() < 4 || v.size() % 2 != 0)
      throw ConfigError(
          "key 'profile.vertices': expected x y pairs (at least two)");
    for (std::size_t i = 0; i < v.size(); i += 2)
      sc.profile_vertices.push_back(Vec2(v[i], v[i + 1]));
  }
  if (sc.has_truth_profile()) {
    const SurfaceProfile p = sc.make_profile(); // validates the parameters
    if (sc.profile_kind != "flat" && !(p.support_radius() < sc.R))
      throw ConfigError(
          "key 'geometry.R': profile support radius " +
          fmt_g(p.support_radius()) +
          " must lie strictly inside the truncation radius " + fmt_g(sc.R));
  }

  // Excitations and frequencies (prerecorded data carries its own).
  if (mode != Mode::verify && synthesizes) {
    sc.theta_groups = cfg.get_angle_groups("incident.configs");
    for (const auto& g : sc.theta_groups)
      check_thetas(g, "incident.configs");

    const bool has_n = cfg.has("frequencies.N");
    const bool has_ks = cfg.has("frequencies.ks");
    if (has_n == has_ks)
      throw ConfigError(
          "give exactly one of 'frequencies.N' and 'frequencies.ks'");
    if (has_n) {
      const int N = cfg.get_int("frequencies.N");
      if (N < 1)
        throw ConfigError("key 'frequencies.N': need at least 1 frequency");
      for (int j = 0; j < N; ++j)
        sc.ks.push_back(2.0 * j + 1.0);
    } else {
      sc.ks = ascending_ks_from(cfg, "frequencies.ks");
    }
  }

  // Measured quantity and its grid.
  if (mode == Mode::forward || mode == Mode::synth) {
    const std::string kind_s = cfg.get_string("data.kind", "far");
    try {
      sc.kind = data_kind_from_string(kind_s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("key 'data.kind': ") + e.what());
    }
  } else {
    sc.kind = mode == Mode::invert_near ? DataKind::near : DataKind::far;
  }
  const bool far_grid_used =
      (sc.kind == DataKind::far && synthesizes) || mode == Mode::verify;
  if (far_grid_used) {
    sc.far_count = cfg.get_int("grid.far_count", 200);
    if (sc.far_count < 2)
      throw ConfigError("key 'grid.far_count': need at least 2 angles");
  }
  if (sc.kind == DataKind::near && synthesizes) {
    sc.near_height = cfg.get_double("grid.near_height", 1.0);
    sc.near_halfwidth = cfg.get_double("grid.near_halfwidth", 1.0);
    sc.near_count = cfg.get_int("grid.near_count", 200);
    if (!(sc.near_height > 0.0))
      throw ConfigError("key 'grid.near_height': must be positive");
    if (!(sc.near_halfwidth > 0.0))
      throw ConfigError("key 'grid.near_halfwidth': must be positive");
    if (sc.near_count < 2)
      throw ConfigError("key 'grid.near_count': need at least 2 points");
  }

  if (synthesizes) {
    sc.data_mesh_ratio = cfg.get_double("data.mesh_ratio", 1.5);
    if (!(sc.data_mesh_ratio >= 1.0))
      throw ConfigError("key 'data.mesh_ratio': must be >= 1");
  }

  // Noise model (synthetic data only; forward fields stay exact).
  if (mode == Mode::synth || (is_invert && synthesizes)) {
    sc.noise.delta = cfg.get_double("noise.delta", 0.05);
    if (!(sc.noise.delta >= 0.0))
      throw ConfigError("key 'noise.delta': must be >= 0");
    sc.noise.seed = cfg.get_uint64("noise.seed", 1);
    const std::string dist =
        cfg.get_string("noise.distribution", "clamped_normal");
    try {
      sc.noise.kind = noise_kind_from_string(dist);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("key 'noise.distribution': ") + e.what());
    }
  }

  if (is_invert) {
    InversionConfig& inv = sc.inversion;
    inv.M = cfg.get_int("inversion.M");
    inv.R = sc.R;
    inv.rho = cfg.get_double("inversion.rho", 0.8);
    inv.tau = cfg.get_double("inversion.tau", 1.5);
    inv.delta = cfg.get_double("inversion.delta",
                               synthesizes ? sc.noise.delta : 0.05);
    inv.max_inner = cfg.get_int("inversion.max_inner", 25);
    inv.mesh_ratio = cfg.get_double("inversion.mesh_ratio", 1.0);
    if (cfg.has("inversion.initial_coeffs")) {
      const std::vector<double> a = cfg.get_reals("inversion.initial_coeffs");
      inv.initial =
          Eigen::Map<const RealVector>(a.data(), static_cast<int>(a.size()));
    }
    try {
      inv.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("inversion config: ") + e.what());
    }
  }

  if (mode != Mode::verify) {
    sc.plots = cfg.get_bool("output.plots", true);
    sc.profile_samples = cfg.get_int("output.profile_samples", 401);
    if (sc.profile_samples < 2)
      throw ConfigError("key 'output.profile_samples': need at least 2");
  }

  if (mode == Mode::verify) {
    VerifySpec& vf = sc.verify;
    if (cfg.has("verify.flat_ks")) {
      vf.flat_ks = cfg.get_reals("verify.flat_ks");
      for (double k : vf.flat_ks)
        if (!(k > 0.0))
          throw ConfigError("key 'verify.flat_ks': wavenumbers must be "
                            "positive");
    }
    vf.k = cfg.get_double("verify.k", vf.k);
    if (!(vf.k > 0.0))
      throw ConfigError("key 'verify.k': must be positive");
    vf.theta = cfg.get_angle("verify.theta", vf.theta);
    if (cfg.has("verify.pair"))
      vf.pair = cfg.get_reals("verify.pair");
    check_thetas({vf.theta}, "verify.theta");
    if (vf.pair.size() != 2)
      throw ConfigError("key 'verify.pair': expected exactly two angles");
    check_thetas(vf.pair, "verify.pair");
    vf.ell = cfg.get_double("verify.ell", vf.ell);
    if (vf.ell == 0.0)
      throw ConfigError("key 'verify.ell': translation must be nonzero");
    vf.mesh_ratio = cfg.get_double("verify.mesh_ratio", vf.mesh_ratio);
    if (!(vf.mesh_ratio >= 1.0))
      throw ConfigError("key 'verify.mesh_ratio': must be >= 1");
    vf.far_count = sc.far_count;
    vf.tol_flat = cfg.get_double("verify.tol_flat", vf.tol_flat);
    vf.tol_phase = cfg.get_double("verify.tol_phase", vf.tol_phase);
    vf.tol_intensity = cfg.get_double("verify.tol_intensity", vf.tol_intensity);
    vf.min_break = cfg.get_double("verify.min_break", vf.min_break);
    if (!(vf.tol_flat > 0.0) || !(vf.tol_phase > 0.0) ||
        !(vf.tol_intensity > 0.0) || !(vf.min_break > 0.0))
      throw ConfigError("verify tolerances must be positive");

    if (sc.profile_kind == "flat")
      throw ConfigError(
          "key 'profile.kind': the translation properties need a non-flat "
          "profile");
    const double radius = sc.make_profile().support_radius();
    const double lattice =
        2.0 * kPi /
        (vf.k * std::abs(std::sin(vf.pair[1]) - std::sin(vf.pair[0])));
    const double reach = radius + std::max(std::abs(vf.ell), lattice);
    if (!(reach < sc.R))
      throw ConfigError(
          "key 'geometry.R': translated supports reach " + fmt_g(reach) +
          "; increase the truncation radius beyond that");
  }

  const std::vector<std::string> leftover = cfg.unread_keys();
  if (!leftover.empty())
    throw ConfigError("unknown key(s): " + join(leftover, ", "));
  return sc;
}

Config resolved_config(const Scenario& sc) {
  Config out;
  out.set("mode", to_string(sc.mode));
  out.set("version", kCliVersion);
  out.set("geometry.R", fmt(sc.R));

  if (sc.has_truth_profile()) {
    out.set("profile.kind", sc.profile_kind);
    if (sc.profile_kind == "spline") {
      out.set("profile.R", fmt(sc.profile_R));
      std::vector<std::string> cs;
      for (int i = 0; i < sc.profile_coeffs.size(); ++i)
        cs.push_back(fmt(sc.profile_coeffs[i]));
      out.set("profile.coeffs", join(cs, " "));
    } else if (sc.profile_kind == "piecewise") {
      std::vector<std::string> vs;
      for (const Vec2& v : sc.profile_vertices) {
        vs.push_back(fmt(v[0]));
        vs.push_back(fmt(v[1]));
      }
      out.set("profile.vertices", join(vs, " "));
    }
  }

  const bool is_invert =
      sc.mode == Mode::invert_far || sc.mode == Mode::invert_near;
  const bool synthesizes = sc.mode == Mode::forward || sc.mode == Mode::synth ||
                           (is_invert && sc.data_dir.empty());

  if (sc.mode != Mode::verify && synthesizes) {
    std::vector<std::string> groups;
    for (const auto& g : sc.theta_groups) {
      std::vector<std::string> angles;
      for (double t : g)
        angles.push_back(fmt(t));
      groups.push_back(join(angles, ", "));
    }
    out.set("incident.configs", join(groups, " ; "));
    std::vector<std::string> ks;
    for (double k : sc.ks)
      ks.push_back(fmt(k));
    out.set("frequencies.ks", join(ks, " "));
  }

  if (sc.mode == Mode::forward || sc.mode == Mode::synth)
    out.set("data.kind", to_string(sc.kind));
  if (is_invert && !sc.data_dir.empty())
    out.set("data.dir", sc.data_dir);
  if (synthesizes)
    out.set("data.mesh_ratio", fmt(sc.data_mesh_ratio));

  if ((sc.kind == DataKind::far && synthesizes) || sc.mode == Mode::verify)
    out.set("grid.far_count", std::to_string(sc.far_count));
  if (sc.kind == DataKind::near && synthesizes) {
    out.set("grid.near_height", fmt(sc.near_height));
    out.set("grid.near_halfwidth", fmt(sc.near_halfwidth));
    out.set("grid.near_count", std::to_string(sc.near_count));
  }

  if (sc.mode == Mode::synth || (is_invert && synthesizes)) {
    out.set("noise.delta", fmt(sc.noise.delta));
    out.set("noise.seed", std::to_string(sc.noise.seed));
    out.set("noise.distribution", to_string(sc.noise.kind));
  }

  if (is_invert) {
    const InversionConfig& inv = sc.inversion;
    out.set("inversion.M", std::to_string(inv.M));
    out.set("inversion.rho", fmt(inv.rho));
    out.set("inversion.tau", fmt(inv.tau));
    out.set("inversion.delta", fmt(inv.delta));
    out.set("inversion.max_inner", std::to_string(inv.max_inner));
    out.set("inversion.mesh_ratio", fmt(inv.mesh_ratio));
    if (inv.initial.size() > 0) {
      std::vector<std::string> cs;
      for (int i = 0; i < inv.initial.size(); ++i)
        cs.push_back(fmt(inv.initial[i]));
      out.set("inversion.initial_coeffs", join(cs, " "));
    }
  }

  if (sc.mode != Mode::verify) {
    out.set("output.plots", sc.plots ? "true" : "false");
    out.set("output.profile_samples", std::to_string(sc.profile_samples));
  }

  if (sc.mode == Mode::verify) {
    const VerifySpec& vf = sc.verify;
    std::vector<std::string> fk;
    for (double k : vf.flat_ks)
      fk.push_back(fmt(k));
    out.set("verify.flat_ks", join(fk, " "));
    out.set("verify.k", fmt(vf.k));
    out.set("verify.theta", fmt(vf.theta));
    out.set("verify.pair", fmt(vf.pair[0]) + ", " + fmt(vf.pair[1]));
    out.set("verify.ell", fmt(vf.ell));
    out.set("verify.mesh_ratio", fmt(vf.mesh_ratio));
    out.set("verify.tol_flat", fmt(vf.tol_flat));
    out.set("verify.tol_phase", fmt(vf.tol_phase));
    out.set("verify.tol_intensity", fmt(vf.tol_intensity));
    out.set("verify.min_break", fmt(vf.min_break));
  }
  return out;
}

void write_manifest(std::ostream& os, const Scenario& sc) {
  os << "# rough-imager manifest: fully resolved scenario\n";
  os << "# rerun with: rough-imager " << to_string(sc.mode)
     << " --config manifest.cfg --out <dir>\n";
  const Config resolved = resolved_config(sc);
  for (const auto& [k, v] : resolved.entries())
    os << k << " = " << v << "\n";
}

// ---------------------------------------------------------------------------
// Presets

std::vector<std::string> preset_names() {
  return {"example1-shape-only", "example2-two-wave", "example6-near-field"};
}

std::string preset_config(const std::string& name) {
  if (name == "example1-shape-only")
    return R"(# Smooth single-bump surface from one-wave phaseless far-field data.
# One incident direction cannot fix the horizontal position of the bump
# (translated surfaces produce the same intensities), so the run starts
# from a nonzero window of coefficients and recovers the shape; the
# variant start 0 0 0 0 0.1 0.1 0.1 0 0 0 lands on a translate.
# R = 1.5: early low-frequency Newton iterates overshoot the bump height,
# and the surface graph must stay inside the truncation disk.
mode = invert-far

[geometry]
R = 1.5

[profile]
kind = example1

[incident]
configs = -pi/6

[frequencies]
N = 10

[grid]
far_count = 200

[noise]
delta = 0.05
seed = 1
distribution = clamped_normal

[data]
mesh_ratio = 1.5

[inversion]
M = 10
rho = 0.8
tau = 1.5
max_inner = 25
mesh_ratio = 1
initial_coeffs = 0 0.1 0.1 0.1 0 0 0 0 0 0

[output]
plots = true
profile_samples = 401
)";
  if (name == "example2-two-wave")
    return R"(# Smooth single-bump surface from two-wave phaseless far-field data.
# The second incident direction removes the translation ambiguity, so both
# the location and the shape are recovered from the same nonzero start.
# R = 1.5: early low-frequency Newton iterates overshoot the bump height,
# and the surface graph must stay inside the truncation disk.
mode = invert-far

[geometry]
R = 1.5

[profile]
kind = example1

[incident]
configs = -pi/6, pi/6

[frequencies]
N = 13

[grid]
far_count = 200

[noise]
delta = 0.05
seed = 1
distribution = clamped_normal

[data]
mesh_ratio = 1.5

[inversion]
M = 10
rho = 0.8
tau = 1.5
max_inner = 25
mesh_ratio = 1
initial_coeffs = 0 0.1 0.1 0.1 0 0 0 0 0 0

[output]
plots = true
profile_samples = 401
)";
  if (name == "example6-near-field")
    return R"(# Piecewise-linear surface from one-wave phaseless near-field data
# measured on the segment |x1| <= 1 at height 1.  Near-field data carries
# location information, so the run starts from the flat plane (all
# coefficients zero).
mode = invert-near

[geometry]
R = 1

[profile]
kind = example3-piecewise

[incident]
configs = -pi/6

[frequencies]
N = 18

[grid]
near_height = 1
near_halfwidth = 1
near_count = 200

[noise]
delta = 0.05
seed = 1
distribution = clamped_normal

[data]
mesh_ratio = 1.5

[inversion]
M = 40
rho = 0.8
tau = 1.5
max_inner = 25
mesh_ratio = 1

[output]
plots = true
profile_samples = 401
)";
  throw ConfigError("unknown preset '" + name + "' (available: " +
                    join(preset_names(), ", ") + ")");
}

// ---------------------------------------------------------------------------
// Artifact helpers

namespace {

std::ofstream open_artifact(const fs::path& dir, const std::string& rel,
                            std::vector<std::string>& artifacts) {
  const fs::path p = dir / rel;
  std::ofstream os(p);
  if (!os)
    throw std::runtime_error("cannot write '" + p.string() + "'");
  artifacts.push_back(rel);
  return os;
}

int planned_mesh_n(double k, double R, double ratio) {
  return round_up_even(mesh_size_policy(k, R) * ratio);
}

void write_truth_profile(const fs::path& dir, const Scenario& sc,
                         std::vector<std::string>& artifacts) {
  const SurfaceProfile p = sc.make_profile();
  std::ofstream os = open_artifact(dir, "truth_profile.txt", artifacts);
  os << "# truth-profile v1\n";
  os << "# profile " << p.description() << "\n";
  os << "# columns: x1 height\n";
  const int S = sc.profile_samples;
  for (int j = 0; j < S; ++j) {
    const double x = -sc.R + 2.0 * sc.R * j / (S - 1);
    os << fmt(x) << " " << fmt(p.value(x)) << "\n";
  }
}

void write_profile_checkpoint(std::ostream& os, const Scenario& sc,
                              const SurfaceProfile& truth,
                              const SurfaceProfile& initial,
                              const SurfaceProfile& current, double k) {
  os << "# reconstructed-profile v1\n";
  os << "# k " << fmt(k) << "\n";
  os << "# truth "
     << (sc.has_truth_profile() ? truth.description() : std::string("unknown"))
     << "\n";
  os << "# columns: x1 true initial current\n";
  const int S = sc.profile_samples;
  for (int j = 0; j < S; ++j) {
    const double x = -sc.R + 2.0 * sc.R * j / (S - 1);
    const double ht = sc.has_truth_profile() ? truth.value(x) : 0.0;
    os << fmt(x) << " " << fmt(ht) << " " << fmt(initial.value(x)) << " "
       << fmt(current.value(x)) << "\n";
  }
}

void write_history_rows(std::ostream& os,
                        const std::vector<IterationRecord>& history) {
  os << "# columns: k iteration err beta step_norm stepped unreachable exit\n";
  for (const IterationRecord& r : history)
    os << fmt(r.k) << " " << r.iteration << " " << fmt(r.err) << " "
       << fmt(r.beta) << " " << fmt(r.step_norm) << " " << (r.stepped ? 1 : 0)
       << " " << (r.target_unreachable ? 1 : 0) << " "
       << (r.exit.empty() ? "-" : r.exit) << "\n";
}

DatasetRequest dataset_request(const Scenario& sc) {
  DatasetRequest req;
  req.profile = sc.make_profile();
  req.profile_tag = sc.profile_kind;
  req.kind = sc.kind;
  req.ks = sc.ks;
  req.thetas = sc.theta_groups;
  req.R = sc.R;
  req.mesh_ratio = sc.data_mesh_ratio;
  req.far_count = sc.far_count;
  req.near_height = sc.near_height;
  req.near_halfwidth = sc.near_halfwidth;
  req.near_count = sc.near_count;
  req.delta = sc.noise.delta;
  req.seed = sc.noise.seed;
  req.noise_kind = sc.noise.kind;
  return req;
}

// Prerecorded measurement files <data_dir>/{far|near}_k*.txt.
std::vector<MeasurementSet> load_data_dir(const Scenario& sc) {
  const std::string prefix = to_string(sc.kind) + "_k";
  if (!fs::is_directory(sc.data_dir))
    throw ConfigError("key 'data.dir': '" + sc.data_dir +
                      "' is not a directory");
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(sc.data_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".txt")
      paths.push_back(entry.path());
  }
  if (paths.empty())
    throw ConfigError("key 'data.dir': no " + prefix +
                      "*.txt measurement files in '" + sc.data_dir + "'");
  std::sort(paths.begin(), paths.end());
  std::vector<MeasurementSet> sets;
  for (const fs::path& p : paths) {
    std::ifstream is(p);
    if (!is)
      throw ConfigError("key 'data.dir': cannot read '" + p.string() + "'");
    try {
      sets.push_back(read_measurement_set(is));
    } catch (const std::exception& e) {
      throw ConfigError("key 'data.dir': '" + p.string() + "': " + e.what());
    }
    if (sets.back().kind != sc.kind)
      throw ConfigError("key 'data.dir': '" + p.string() +
                        "' holds the wrong data kind for this mode");
  }
  std::sort(sets.begin(), sets.end(),
            [](const MeasurementSet& a, const MeasurementSet& b) {
              return a.k < b.k;
            });
  for (std::size_t i = 1; i < sets.size(); ++i)
    if (!(sets[i].k > sets[i - 1].k))
      throw ConfigError("key 'data.dir': duplicate wavenumber " +
                        fmt_g(sets[i].k) + " across measurement files");
  return sets;
}

// ---------------------------------------------------------------------------
// Mode runners

RunResult run_forward(const Scenario& sc, const fs::path& dir,
                      std::vector<std::string> artifacts) {
  const SurfaceProfile profile = sc.make_profile();
  write_truth_profile(dir, sc, artifacts);
  const RealVector grid = sc.kind == DataKind::far
                              ? far_grid(sc.far_count)
                              : near_grid(sc.near_halfwidth, sc.near_count);
  for (double k : sc.ks) {
    const double eta = default_coupling(k);
    const int n = planned_mesh_n(k, sc.R, sc.data_mesh_ratio);
    auto mesh = std::make_shared<BoundaryMesh>(build_mesh(profile, sc.R, n));
    const SystemOperator op = assemble_system(mesh, k, eta);
    std::ofstream os = open_artifact(
        dir, "field_" + to_string(sc.kind) + "_k" + fmt_g(k) + ".txt",
        artifacts);
    os << "# scattered-field v1\n";
    os << "# kind " << to_string(sc.kind) << "\n";
    os << "# k " << fmt(k) << "\n";
    os << "# profile " << sc.profile_kind << "\n";
    os << "# eta " << fmt(eta) << "\n";
    os << "# mesh_n " << n << "\n";
    if (sc.kind == DataKind::near) {
      os << "# near_height " << fmt(sc.near_height) << "\n";
      os << "# near_halfwidth " << fmt(sc.near_halfwidth) << "\n";
    }
    os << "# grid_count " << grid.size() << "\n";
    os << "# n_d " << sc.theta_groups.size() << "\n";
    os << "# columns: index grid re im intensity\n";
    for (std::size_t l = 0; l < sc.theta_groups.size(); ++l) {
      const IncidentConfig cfg(k, sc.theta_groups[l]);
      const DensitySolution sol = solve_density(op, assemble_rhs(*mesh, cfg));
      const ComplexVector u =
          sc.kind == DataKind::far
              ? eval_far_field(sol, grid)
              : eval_near_field(sol, cfg, sc.near_height, sc.near_halfwidth,
                                sc.near_count);
      os << "# config " << l << " thetas";
      for (double t : sc.theta_groups[l])
        os << " " << fmt(t);
      os << "\n";
      for (int j = 0; j < grid.size(); ++j)
        os << j << " " << fmt(grid[j]) << " " << fmt(u[j].real()) << " "
           << fmt(u[j].imag()) << " " << fmt(std::norm(u[j])) << "\n";
    }
  }
  RunResult rr;
  rr.artifacts = std::move(artifacts);
  rr.message = "forward: exact fields for " + std::to_string(sc.ks.size()) +
               " wavenumber(s) written";
  if (sc.plots) {
    for (std::string& p : emit_plots(dir.string()))
      rr.artifacts.push_back(std::move(p));
  }
  return rr;
}

RunResult run_synth(const Scenario& sc, const fs::path& dir,
                    std::vector<std::string> artifacts) {
  write_truth_profile(dir, sc, artifacts);
  const std::vector<MeasurementSet> sets = make_dataset(dataset_request(sc));
  for (const std::string& path : write_dataset(dir.string(), sets))
    artifacts.push_back(fs::path(path).filename().string());
  RunResult rr;
  rr.artifacts = std::move(artifacts);
  rr.message = "synth: " + std::to_string(sets.size()) + " " +
               to_string(sc.kind) + "-field measurement file(s) written";
  if (sc.plots) {
    for (std::string& p : emit_plots(dir.string()))
      rr.artifacts.push_back(std::move(p));
  }
  return rr;
}

RunResult run_invert(const Scenario& sc, const fs::path& dir,
                     std::vector<std::string> artifacts) {
  std::vector<MeasurementSet> sets;
  if (sc.data_dir.empty()) {
    write_truth_profile(dir, sc, artifacts);
    sets = make_dataset(dataset_request(sc));
    for (const std::string& path : write_dataset(dir.string(), sets))
      artifacts.push_back(fs::path(path).filename().string());
  } else {
    sets = load_data_dir(sc);
  }

  const InversionConfig& inv = sc.inversion;
  const SplineBasis basis(inv.M, inv.R);
  const RealVector init = inv.initial.size() > 0
                              ? inv.initial
                              : RealVector(RealVector::Zero(inv.M));
  const SurfaceProfile truth =
      sc.has_truth_profile() ? sc.make_profile() : SurfaceProfile();
  const SurfaceProfile initial_profile = spline_profile(basis, init);

  RealVector a = init;
  std::vector<IterationRecord> history;
  std::vector<std::pair<double, RealVector>> snapshots;
  int done = 0;
  std::string failure;

  for (const MeasurementSet& set : sets) {
    InversionConfig step_cfg = inv;
    step_cfg.initial = a;
    try {
      InversionState st = recursive_newton({set}, step_cfg);
      a = st.a;
      history.insert(history.end(), st.history.begin(), st.history.end());
      snapshots.emplace_back(set.k, a);
      ++done;
    } catch (const InversionError& e) {
      a = e.state.a;
      history.insert(history.end(), e.state.history.begin(),
                     e.state.history.end());
      failure = e.what();
    } catch (const std::exception& e) {
      failure = e.what();
    }
    if (!failure.empty())
      break;
    std::ofstream os = open_artifact(
        dir, "profile_k" + fmt_g(set.k) + ".txt", artifacts);
    write_profile_checkpoint(os, sc, truth, initial_profile,
                             spline_profile(basis, a), set.k);
  }

  {
    std::ofstream os = open_artifact(dir, "run_log.txt", artifacts);
    os << "# inversion iteration log\n";
    write_history_rows(os, history);
  }
  {
    std::ofstream os = open_artifact(dir, "coeffs.txt", artifacts);
    os << "# reconstructed spline coefficients after each completed "
          "wavenumber\n";
    os << "# columns: k a_1 .. a_M (last row = final)\n";
    for (const auto& [kk, snap] : snapshots) {
      os << fmt(kk);
      for (int i = 0; i < snap.size(); ++i)
        os << " " << fmt(snap[i]);
      os << "\n";
    }
  }
  {
    std::ofstream os = open_artifact(dir, "summary.txt", artifacts);
    os << "# per-frequency summary\n";
    os << "# columns: k iterations final_err exit\n";
    for (const MeasurementSet& set : sets) {
      int iters = 0;
      double last_err = 0.0;
      std::string exit;
      for (const IterationRecord& r : history)
        if (r.k == set.k) {
          ++iters;
          last_err = r.err;
          if (!r.exit.empty())
            exit = r.exit;
        }
      if (iters == 0)
        break;
      os << fmt(set.k) << " " << iters << " " << fmt(last_err) << " "
         << (exit.empty() ? "-" : exit) << "\n";
    }
    os << "# frequencies_done " << done << "\n";
    if (sc.has_truth_profile() && failure.empty()) {
      const SurfaceProfile rec = spline_profile(basis, a);
      double dev = 0.0;
      const int S = sc.profile_samples;
      for (int j = 0; j < S; ++j) {
        const double x = -sc.R + 2.0 * sc.R * j / (S - 1);
        dev = std::max(dev, std::abs(rec.value(x) - truth.value(x)));
      }
      os << "# max_profile_deviation " << fmt(dev) << "\n";
    }
  }

  RunResult rr;
  if (!failure.empty()) {
    std::ofstream os = open_artifact(dir, "failure_state.txt", artifacts);
    os << "# inversion failure snapshot\n";
    os << "# error " << failure << "\n";
    os << "# frequencies_done " << done << "\n";
    os << "# coefficients\n";
    for (int i = 0; i < a.size(); ++i)
      os << (i ? " " : "") << fmt(a[i]);
    os << "\n";
    write_history_rows(os, history);
    rr.exit_code = 3;
    rr.message = "inversion failed after " + std::to_string(done) +
                 " completed wavenumber(s): " + failure;
    rr.artifacts = std::move(artifacts);
    return rr;
  }

  double final_err = 0.0;
  std::string final_exit;
  if (!history.empty()) {
    final_err = history.back().err;
    final_exit = history.back().exit;
  }
  rr.message = "invert: " + std::to_string(done) +
               " wavenumber(s) processed, final err " + fmt_g(final_err) +
               " (" + (final_exit.empty() ? "-" : final_exit) + ")";
  rr.artifacts = std::move(artifacts);
  if (sc.plots) {
    for (std::string& p : emit_plots(dir.string()))
      rr.artifacts.push_back(std::move(p));
  }
  return rr;
}

ComplexVector far_pattern(const SurfaceProfile& profile, double R, double k,
                          const std::vector<double>& thetas, int n,
                          const RealVector& angles) {
  auto mesh = std::make_shared<BoundaryMesh>(build_mesh(profile, R, n));
  const SystemOperator op = assemble_system(mesh, k, default_coupling(k));
  const IncidentConfig cfg(k, thetas);
  const DensitySolution sol = solve_density(op, assemble_rhs(*mesh, cfg));
  return eval_far_field(sol, angles);
}

RunResult run_verify(const Scenario& sc, const fs::path& dir,
                     std::vector<std::string> artifacts) {
  const VerifySpec& vf = sc.verify;
  const SurfaceProfile profile = sc.make_profile();
  const RealVector angles = far_grid(vf.far_count);
  std::vector<std::string> lines;
  bool all_pass = true;

  auto report = [&](bool pass, const std::string& name, double measured,
                    const std::string& rel, double bound) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "[%s] %-34s measured=%.3e %s %.1e",
                  pass ? "PASS" : "FAIL", name.c_str(), measured, rel.c_str(),
                  bound);
    lines.push_back(buf);
    all_pass = all_pass && pass;
  };

  // A perfectly reflecting plane returns exactly the mirrored wave: the
  // perturbation-driven scattered pattern must vanish.
  for (double kf : vf.flat_ks) {
    const int n = planned_mesh_n(kf, sc.R, vf.mesh_ratio);
    const ComplexVector u =
        far_pattern(flat_profile(), sc.R, kf, {vf.theta}, n, angles);
    const double measured = u.cwiseAbs().maxCoeff();
    report(measured <= vf.tol_flat, "flat-null k=" + fmt_g(kf), measured,
           "<=", vf.tol_flat);
  }

  const double k = vf.k;
  const int n = planned_mesh_n(k, sc.R, vf.mesh_ratio);

  // One incident wave: translating the surface only multiplies the far
  // field by a unimodular phase, so intensities cannot see the shift.
  {
    const ComplexVector u0 =
        far_pattern(profile, sc.R, k, {vf.theta}, n, angles);
    const ComplexVector um = far_pattern(shifted_profile(profile, vf.ell),
                                         sc.R, k, {vf.theta}, n, angles);
    const double scale = u0.cwiseAbs().maxCoeff();
    double dev_phase = 0.0, dev_int = 0.0;
    for (int j = 0; j < angles.size(); ++j) {
      const Complex phase = std::exp(
          kImag * k * vf.ell * (std::sin(vf.theta) - std::cos(angles[j])));
      dev_phase = std::max(dev_phase, std::abs(um[j] - phase * u0[j]));
      dev_int =
          std::max(dev_int, std::abs(std::norm(um[j]) - std::norm(u0[j])));
    }
    report(dev_phase / scale <= vf.tol_phase, "translation-phase-relation",
           dev_phase / scale, "<=", vf.tol_phase);
    report(dev_int / (scale * scale) <= vf.tol_intensity,
           "translation-intensity-invariance", dev_int / (scale * scale),
           "<=", vf.tol_intensity);
  }

  // Two incident waves: the phase factors of the two waves only align on a
  // lattice of shifts, so intensities repeat there and differ off it.
  {
    const double dsin = std::sin(vf.pair[1]) - std::sin(vf.pair[0]);
    const double lattice = -2.0 * kPi / (k * std::abs(dsin));
    const ComplexVector u0 = far_pattern(profile, sc.R, k, vf.pair, n, angles);
    const double scale2 = u0.cwiseAbs2().maxCoeff();
    auto intensity_dev = [&](double ell) {
      const ComplexVector um = far_pattern(shifted_profile(profile, ell),
                                           sc.R, k, vf.pair, n, angles);
      double dev = 0.0;
      for (int j = 0; j < angles.size(); ++j)
        dev = std::max(dev, std::abs(std::norm(um[j]) - std::norm(u0[j])));
      return dev / scale2;
    };
    const double on_lattice = intensity_dev(lattice);
    const double off_lattice = intensity_dev(0.5 * lattice);
    report(on_lattice <= vf.tol_intensity, "two-wave-lattice-invariance",
           on_lattice, "<=", vf.tol_intensity);
    report(off_lattice >= vf.min_break, "two-wave-half-shift-detected",
           off_lattice, ">=", vf.min_break);
  }

  {
    std::ofstream os = open_artifact(dir, "verify_report.txt", artifacts);
    os << "# phaseless far-field property suite\n";
    os << "# profile " << sc.profile_kind << ", R " << fmt_g(sc.R)
       << ", mesh ratio " << fmt_g(vf.mesh_ratio) << ", " << vf.far_count
       << " angles\n";
    for (const std::string& l : lines)
      os << l << "\n";
    os << (all_pass ? "# result: all properties hold\n"
                    : "# result: at least one property FAILED\n");
  }

  RunResult rr;
  rr.exit_code = all_pass ? 0 : 3;
  rr.message = join(lines, "\n") + "\nverify: " +
               (all_pass ? "all properties hold" : "FAILURE detected");
  rr.artifacts = std::move(artifacts);
  return rr;
}

} // namespace

RunResult run_scenario(const Scenario& sc, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::vector<std::string> artifacts;
  {
    std::ofstream os = open_artifact(dir, "manifest.cfg", artifacts);
    write_manifest(os, sc);
  }
  try {
    switch (sc.mode) {
      case Mode::forward:
        return run_forward(sc, dir, std::move(artifacts));
      case Mode::synth:
        return run_synth(sc, dir, std::move(artifacts));
      case Mode::invert_far:
      case Mode::invert_near:
        return run_invert(sc, dir, std::move(artifacts));
      case Mode::verify:
        return run_verify(sc, dir, std::move(artifacts));
    }
    throw std::logic_error("unhandled mode");
  } catch (const ConfigError&) {
    throw; // configuration mistakes keep their own exit path
  } catch (const std::exception& e) {
    RunResult rr;
    rr.exit_code = 3;
    rr.message = std::string("numerical failure: ") + e.what();
    std::ofstream os(dir / "failure_state.txt");
    os << "# run failure\n# error " << e.what() << "\n";
    rr.artifacts = {"manifest.cfg", "failure_state.txt"};
    return rr;
  }
}

std::vector<std::string> emit_plots(const std::string& run_dir) {
  const fs::path dir(run_dir);
  if (!fs::is_directory(dir))
    throw std::invalid_argument("emit_plots: '" + run_dir +
                                "' is not a directory");
  std::vector<std::string> profiles, datasets, fields;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() <= 4 || name.substr(name.size() - 4) != ".txt")
      continue;
    if (name.rfind("profile_k", 0) == 0)
      profiles.push_back(name);
    else if (name.rfind("far_k", 0) == 0 || name.rfind("near_k", 0) == 0)
      datasets.push_back(name);
    else if (name.rfind("field_", 0) == 0)
      fields.push_back(name);
  }
  std::sort(profiles.begin(), profiles.end());
  std::sort(datasets.begin(), datasets.end());
  std::sort(fields.begin(), fields.end());
  if (profiles.empty() && datasets.empty() && fields.empty())
    throw std::invalid_argument("emit_plots: no plottable artifacts in '" +
                                run_dir + "'");
  fs::create_directories(dir / "plots");
  std::vector<std::string> written;

  auto stem_tag = [](const std::string& name, const std::string& prefix) {
    return name.substr(prefix.size(), name.size() - prefix.size() - 4);
  };

  for (const std::string& name : profiles) {
    const std::string tag = stem_tag(name, "profile_k");
    const std::string rel = "plots/overlay_k" + tag + ".gp";
    std::ofstream os(dir / rel);
    os << "# gnuplot overlay; run from the run directory:\n";
    os << "#   gnuplot " << rel << "\n";
    os << "set terminal pngcairo size 900,540\n";
    os << "set output 'plots/overlay_k" << tag << ".png'\n";
    os << "set xlabel 'x_1'\nset ylabel 'height'\nset key top right\n";
    os << "plot '" << name << "' using 1:2 with lines lw 2 title 'true', \\\n";
    os << "     '' using 1:3 with lines dashtype 2 title 'initial', \\\n";
    os << "     '' using 1:4 with lines lw 2 title 'reconstruction (k=" << tag
       << ")'\n";
    written.push_back(rel);
  }

  auto header_int = [&](const std::string& name, const std::string& key) {
    std::ifstream is(dir / name);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] != '#')
        break;
      std::istringstream ls(line);
      std::string hash, k;
      ls >> hash >> k;
      if (k == key) {
        int v = 0;
        ls >> v;
        return v;
      }
    }
    return 0;
  };

  auto data_script = [&](const std::string& name, int value_col,
                         const std::string& what) {
    const int gc = header_int(name, "grid_count");
    const int nd = header_int(name, "n_d");
    if (gc <= 0 || nd <= 0)
      return;
    const bool far = name.find("far") != std::string::npos;
    const std::string stem = name.substr(0, name.size() - 4);
    const std::string rel = "plots/" + stem + ".gp";
    std::ofstream os(dir / rel);
    os << "# gnuplot " << what << "; run from the run directory:\n";
    os << "#   gnuplot " << rel << "\n";
    os << "set terminal pngcairo size 900,540\n";
    os << "set output 'plots/" << stem << ".png'\n";
    os << "set xlabel '" << (far ? "observation angle" : "x_1") << "'\n";
    os << "set ylabel 'intensity'\n";
    os << "plot ";
    for (int l = 0; l < nd; ++l) {
      if (l)
        os << ", \\\n     ";
      os << "'" << name << "' every ::" << l * gc << "::" << (l + 1) * gc - 1
         << " using 2:" << value_col << " with lines title 'config " << l
         << "'";
    }
    os << "\n";
    written.push_back(rel);
  };

  for (const std::string& name : datasets)
    data_script(name, 3, "measured intensities");
  for (const std::string& name : fields)
    data_script(name, 5, "exact field intensities");
  return written;
}

// ---------------------------------------------------------------------------
// Command-line driver

int cli_main(int argc, const char* const* argv) {
  CLI::App app{
      "rough-imager: phaseless scattering data synthesis and reconstruction "
      "of a locally perturbed reflecting plane"};
  std::string mode_s, config_path, preset, out = "run";
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("mode", mode_s,
                 "forward | synth | invert-far | invert-near | verify")
      ->required();
  CLI::Option* oc =
      app.add_option("--config,-c", config_path, "scenario config file");
  CLI::Option* op = app.add_option(
      "--preset,-p", preset,
      "built-in preset (" + join(preset_names(), ", ") + ")");
  oc->excludes(op);
  app.add_option("--out,-o", out, "output directory (default: run)");
  CLI::Option* oseed =
      app.add_option("--seed", seed, "override the noise seed");
  app.add_option("--threads", threads, "worker threads for matrix assembly")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (threads >= 1)
      set_parallel_threads(threads);
    const Mode mode = mode_from_string(mode_s);
    if (config_path.empty() == preset.empty())
      throw ConfigError("give exactly one of --config and --preset");
    Config cfg = preset.empty() ? Config::load(config_path)
                                : Config::parse_string(preset_config(preset));
    if (oseed->count() > 0) {
      const bool uses_noise =
          mode == Mode::synth ||
          ((mode == Mode::invert_far || mode == Mode::invert_near) &&
           !cfg.has("data.dir"));
      if (!uses_noise)
        throw ConfigError(
            "--seed: only synth and self-synthesizing invert runs draw "
            "noise");
      cfg.set("noise.seed", std::to_string(seed));
    }
    const Scenario sc = scenario_from_config(cfg, mode);
    const RunResult rr = run_scenario(sc, out);
    std::cout << rr.message << "\n";
    for (const std::string& a : rr.artifacts)
      std::cout << "  wrote " << (fs::path(out) / a).string() << "\n";
    return rr.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

} // namespace rsi
