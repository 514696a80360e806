#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsi/inversion.hpp"
#include "rsi/synth.hpp"

namespace rsi {

inline constexpr const char* kCliVersion = "1.0.0";

// Configuration mistakes (unreadable file, malformed line, missing/unknown/
// ill-typed key, semantic validation failure).  The message always names the
// offending key or file location.  The command-line driver maps this to
// exit code 2; numerical failures during a run map to exit code 3.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Flat `key = value` store.  INI-style `[section]` headers fold into dotted
// keys (`[noise]` + `delta = 0.05` reads back as "noise.delta").  Blank
// lines and full-line comments starting with '#' or ';' are ignored.
// Duplicate keys are rejected.  Typed getters throw ConfigError naming the
// key; angle-valued getters additionally accept pi fractions ("-pi/6",
// "2pi/5", "0.25*pi").  Every getter marks its key as read so unknown keys
// can be reported after scenario assembly.
class Config {
 public:
  static Config parse(std::istream& is);
  static Config parse_string(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_uint64(const std::string& key,
                           std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  double get_angle(const std::string& key, double fallback) const;
  // Whitespace- or comma-separated real list (pi fractions allowed).
  std::vector<double> get_reals(const std::string& key) const;
  // ';'-separated groups of comma/whitespace-separated angles.
  std::vector<std::vector<double>> get_angle_groups(
      const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }
  // Keys present but never consumed by any getter (typo detector).
  std::vector<std::string> unread_keys() const;

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> read_;
};

// "0.25", "pi", "-pi/6", "2pi/5", "0.25*pi" -> radians.  `context` names the
// key for the error message.
double parse_angle(const std::string& token, const std::string& context);

enum class Mode { forward, synth, invert_far, invert_near, verify };
std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s); // throws ConfigError

// Knobs of the `verify` mode: numerical checks of the phaseless far-field
// ambiguity properties (what intensity data can and cannot distinguish).
struct VerifySpec {
  std::vector<double> flat_ks = {1.0, 5.0, 10.0};
  double k = 5.0;
  double theta = -kPi / 6.0;                      // single-wave property
  std::vector<double> pair = {-kPi / 6.0, kPi / 6.0}; // two-wave property
  double ell = 0.3;        // translation length for the single-wave checks
  double mesh_ratio = 8.0; // multiplies the mesh resolution policy
  int far_count = 200;
  double tol_flat = 1e-8;
  double tol_phase = 1e-6;
  double tol_intensity = 1e-6;
  double min_break = 1e-3; // required two-wave deviation off the lattice
};

// Fully resolved description of one run, assembled from a Config and
// validated (exactly one frequency spec, angles in range, ascending distinct
// wavenumbers, profile supported inside the truncation radius, ...).
struct Scenario {
  Mode mode = Mode::synth;

  // Truth surface ("none" only for invert modes reading prerecorded data).
  std::string profile_kind = "none"; // flat | example1 | example3-piecewise |
                                     // example4-multiscale |
                                     // example5-multiscale | spline |
                                     // piecewise | none
  double profile_R = 1.0;            // spline basis radius
  RealVector profile_coeffs;         // spline kind
  std::vector<Vec2> profile_vertices; // piecewise kind

  double R = 1.0; // truncation radius (basis support radius for inversion)

  std::vector<std::vector<double>> theta_groups; // one entry per excitation
  std::vector<double> ks;                        // ascending, distinct

  DataKind kind = DataKind::far;
  int far_count = 200;
  double near_height = 1.0;
  double near_halfwidth = 1.0;
  int near_count = 200;

  std::string data_dir;         // nonempty: read measurement files instead
  double data_mesh_ratio = 1.5; // truth-solve resolution multiplier
  NoiseSpec noise;

  InversionConfig inversion; // inversion.R is kept equal to R

  bool plots = true;
  int profile_samples = 401;

  VerifySpec verify;

  bool has_truth_profile() const { return profile_kind != "none"; }
  SurfaceProfile make_profile() const; // throws ConfigError
};

// Assembly + validation.  `mode` comes from the command line; a `mode` key
// in the config must agree.  Unknown keys are reported as errors.
Scenario scenario_from_config(const Config& cfg, Mode mode);

// Canonical fully-resolved key set for the scenario: every key the mode
// consumes, defaults materialized, numbers printed with 17 significant
// digits.  parse -> scenario -> resolve is a fixed point.
Config resolved_config(const Scenario& sc);
void write_manifest(std::ostream& os, const Scenario& sc);

// Built-in experiment presets (also shipped under configs/).
std::vector<std::string> preset_names();
std::string preset_config(const std::string& name); // throws ConfigError

struct RunResult {
  int exit_code = 0; // 0 success, 3 numerical failure
  std::vector<std::string> artifacts; // paths relative to the run directory
  std::string message;
};

// Executes the scenario into `out_dir` (created if needed): writes
// manifest.cfg plus the mode's artifacts.  Numerical failures are caught,
// recorded in failure_state.txt, and reported via exit_code 3.  Rerunning
// the written manifest regenerates every data-bearing artifact
// byte-for-byte.
RunResult run_scenario(const Scenario& sc, const std::string& out_dir);

// Writes gnuplot scripts under <run_dir>/plots for every plottable artifact
// (profile checkpoints, measurement files, field files).  Scripts reference
// data files by run-dir-relative paths only.  Throws std::invalid_argument
// when the directory holds nothing plottable.
std::vector<std::string> emit_plots(const std::string& run_dir);

// Full command-line driver: rough-imager <mode> --config <file> | --preset
// <name> [--out <dir>] [--seed <n>] [--threads <n>].  Returns the process
// exit code (0 success, 2 config error, 3 numerical failure).
int cli_main(int argc, const char* const* argv);

} // namespace rsi
