#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rsi/forward.hpp"
#include "rsi/geometry.hpp"
#include "rsi/waves.hpp"

namespace rsi {

enum class DataKind { far, near };

// The multiplicative intensity noise I -> I (1 + delta zeta) draws zeta
// either from a standard normal clamped to [-1, 1] (default) or uniformly
// on [-1, 1]; both keep the relative perturbation within delta.
enum class NoiseKind { clamped_normal, uniform };

std::string to_string(DataKind kind);
std::string to_string(NoiseKind kind);
DataKind data_kind_from_string(const std::string& s);
NoiseKind noise_kind_from_string(const std::string& s);

struct NoiseSpec {
  double delta = 0.0; // 0 = exact data
  std::uint64_t seed = 0;
  NoiseKind kind = NoiseKind::clamped_normal;
};

// One wavenumber's phaseless measurements: one intensity vector per
// incident configuration, on a shared observation grid.
struct MeasurementSet {
  DataKind kind = DataKind::far;
  double k = 0.0;
  std::vector<IncidentConfig> incident; // n_d configurations
  RealVector grid;     // far: angles in (0, pi); near: x1 positions
  double near_height = 0.0;   // near kind only
  double near_halfwidth = 0.0;
  std::vector<RealVector> values; // intensities, one vector per config
  NoiseSpec noise;

  // Provenance recorded with the data.
  double eta = 0.0;
  int mesh_n = 0;
  std::string profile_tag;

  int n_d() const { return static_cast<int>(incident.size()); }
};

// n_f equidistant angles strictly inside (0, pi): t_j = pi (j - 1/2) / n_f.
RealVector far_grid(int n_f);

// Deterministic zeta draws in [-1, 1] (hand-rolled generator mapping so the
// stream is identical across toolchains).
RealVector noise_draws(int m, NoiseKind kind, std::uint64_t seed);

// Per-entry intensity perturbation I_j (1 + delta zeta_j).  delta < 0
// throws; delta = 0 returns the input unchanged.
RealVector add_noise(const RealVector& exact, double delta,
                     std::uint64_t seed, NoiseKind kind);

// Derived per-vector noise substream so regeneration is independent of
// evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Mesh resolution policy: nodes per sub-arc grow with the acoustic size,
// n = max(64, ceil(10 k R / pi) rounded up to even).
int mesh_size_policy(double k, double R);

struct DatasetRequest {
  SurfaceProfile profile;
  std::string profile_tag = "custom";
  DataKind kind = DataKind::far;
  std::vector<double> ks;                  // ascending wavenumbers
  std::vector<std::vector<double>> thetas; // one entry per incident config
  double R = 2.0;                          // truncation radius
  double mesh_ratio = 1.0; // multiplies the policy resolution (truth data
                           // defaults to 1.5 to avoid the inverse crime)
  int far_count = 200;
  double near_height = 1.0;
  double near_halfwidth = 3.0;
  int near_count = 201;
  double delta = 0.0;
  std::uint64_t seed = 0;
  NoiseKind noise_kind = NoiseKind::clamped_normal;

  void validate() const; // throws std::invalid_argument
};

// One MeasurementSet per wavenumber: forward solve per incident config
// (one factorization per k), intensities on the requested grid, then the
// noise model with the substream derived from (seed, flat vector index).
std::vector<MeasurementSet> make_dataset(const DatasetRequest& req);

// Delimited-text serialization: `#`-prefixed header lines carrying the
// full provenance, then per-config blocks of rows `index grid intensity`
// with 17 significant digits (lossless double round-trip).
void write_measurement_set(std::ostream& os, const MeasurementSet& set);
MeasurementSet read_measurement_set(std::istream& is);

// File-per-wavenumber convenience wrappers; returns/expects paths like
// <dir>/<kind>_k<k>.txt.
std::string measurement_filename(const MeasurementSet& set);
std::vector<std::string> write_dataset(const std::string& dir,
                                       const std::vector<MeasurementSet>& sets);
std::vector<MeasurementSet> read_dataset(const std::vector<std::string>& paths);

} // namespace rsi
