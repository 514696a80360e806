#include "rsi/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rsi {

namespace {

// 17 significant digits: enough for a lossless double round-trip.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size())
      throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("dataset parse: bad number for ") +
                             what + ": '" + tok + "'");
  }
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok)
    out.push_back(tok);
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits of the engine output;
// fully specified, unlike the standard distributions.
double canonical(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int round_up_even(double v) {
  int n = static_cast<int>(std::ceil(v));
  if (n % 2 != 0)
    ++n;
  return n;
}

} // namespace

std::string to_string(DataKind kind) {
  return kind == DataKind::far ? "far" : "near";
}

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::clamped_normal ? "clamped_normal" : "uniform";
}

DataKind data_kind_from_string(const std::string& s) {
  if (s == "far")
    return DataKind::far;
  if (s == "near")
    return DataKind::near;
  throw std::invalid_argument("unknown data kind: '" + s + "'");
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "clamped_normal")
    return NoiseKind::clamped_normal;
  if (s == "uniform")
    return NoiseKind::uniform;
  throw std::invalid_argument("unknown noise kind: '" + s + "'");
}

RealVector far_grid(int n_f) {
  if (n_f < 2)
    throw std::invalid_argument("far_grid: need at least 2 angles");
  RealVector t(n_f);
  for (int j = 0; j < n_f; ++j)
    t[j] = kPi * (j + 0.5) / n_f;
  return t;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (0x100000001b3ULL * (index + 1)));
}

RealVector noise_draws(int m, NoiseKind kind, std::uint64_t seed) {
  if (m < 0)
    throw std::invalid_argument("noise_draws: negative count");
  std::mt19937_64 rng(seed);
  RealVector z(m);
  if (kind == NoiseKind::uniform) {
    for (int j = 0; j < m; ++j)
      z[j] = 2.0 * canonical(rng) - 1.0;
    return z;
  }
  for (int j = 0; j < m; ++j) {
    // Box-Muller with u1 mapped into (0, 1] to keep the log finite.
    const double u1 = 1.0 - canonical(rng);
    const double u2 = canonical(rng);
    double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    if (g > 1.0)
      g = 1.0;
    if (g < -1.0)
      g = -1.0;
    z[j] = g;
  }
  return z;
}

RealVector add_noise(const RealVector& exact, double delta, std::uint64_t seed,
                     NoiseKind kind) {
  if (delta < 0.0)
    throw std::invalid_argument("add_noise: negative noise level");
  if (delta == 0.0)
    return exact;
  const RealVector z = noise_draws(static_cast<int>(exact.size()), kind, seed);
  return exact.array() * (1.0 + delta * z.array());
}

int mesh_size_policy(double k, double R) {
  if (!(k > 0.0) || !(R > 0.0))
    throw std::invalid_argument("mesh_size_policy: need k > 0 and R > 0");
  return std::max(64, round_up_even(10.0 * k * R / kPi));
}

void DatasetRequest::validate() const {
  if (!profile.valid())
    throw std::invalid_argument("dataset request: missing profile");
  if (ks.empty())
    throw std::invalid_argument("dataset request: empty wavenumber list");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!(ks[i] > 0.0))
      throw std::invalid_argument("dataset request: wavenumbers must be > 0");
    if (i > 0 && !(ks[i] > ks[i - 1]))
      throw std::invalid_argument(
          "dataset request: wavenumbers must be strictly ascending");
  }
  if (thetas.empty())
    throw std::invalid_argument("dataset request: no incident configuration");
  for (const auto& t : thetas)
    IncidentConfig(ks.front(), t).validate();
  if (!(mesh_ratio >= 1.0))
    throw std::invalid_argument("dataset request: mesh_ratio must be >= 1");
  if (delta < 0.0)
    throw std::invalid_argument("dataset request: negative noise level");
  if (kind == DataKind::far) {
    if (far_count < 2)
      throw std::invalid_argument("dataset request: need far_count >= 2");
  } else {
    if (near_count < 2 || !(near_halfwidth > 0.0))
      throw std::invalid_argument("dataset request: bad near-segment grid");
    if (!(near_height > 0.0))
      throw std::invalid_argument("dataset request: near_height must be > 0");
  }
}

std::vector<MeasurementSet> make_dataset(const DatasetRequest& req) {
  req.validate();
  const int n_d = static_cast<int>(req.thetas.size());
  std::vector<MeasurementSet> sets;
  sets.reserve(req.ks.size());
  for (std::size_t ik = 0; ik < req.ks.size(); ++ik) {
    const double k = req.ks[ik];
    const double eta = default_coupling(k);
    const int n = round_up_even(mesh_size_policy(k, req.R) * req.mesh_ratio);
    auto mesh =
        std::make_shared<BoundaryMesh>(build_mesh(req.profile, req.R, n));
    SystemOperator op = assemble_system(mesh, k, eta);

    MeasurementSet set;
    set.kind = req.kind;
    set.k = k;
    set.grid = req.kind == DataKind::far
                   ? far_grid(req.far_count)
                   : near_grid(req.near_halfwidth, req.near_count);
    if (req.kind == DataKind::near) {
      set.near_height = req.near_height;
      set.near_halfwidth = req.near_halfwidth;
    }
    set.noise = {req.delta, req.seed, req.noise_kind};
    set.eta = eta;
    set.mesh_n = n;
    set.profile_tag = req.profile_tag;

    for (int l = 0; l < n_d; ++l) {
      const IncidentConfig cfg(k, req.thetas[l]);
      const DensitySolution sol =
          solve_density(op, assemble_rhs(*mesh, cfg));
      ComplexVector u;
      if (req.kind == DataKind::far) {
        u = eval_far_field(sol, set.grid);
      } else {
        u = eval_near_field(sol, cfg, req.near_height, req.near_halfwidth,
                            req.near_count);
      }
      RealVector intensity = u.cwiseAbs2();
      const std::uint64_t sub =
          derive_seed(req.seed, ik * static_cast<std::size_t>(n_d) + l);
      set.incident.push_back(cfg);
      set.values.push_back(
          add_noise(intensity, req.delta, sub, req.noise_kind));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

void write_measurement_set(std::ostream& os, const MeasurementSet& set) {
  os << "# phaseless-measurements v1\n";
  os << "# kind " << to_string(set.kind) << "\n";
  os << "# k " << fmt(set.k) << "\n";
  os << "# profile " << set.profile_tag << "\n";
  os << "# eta " << fmt(set.eta) << "\n";
  os << "# mesh_n " << set.mesh_n << "\n";
  os << "# delta " << fmt(set.noise.delta) << "\n";
  os << "# seed " << set.noise.seed << "\n";
  os << "# noise " << to_string(set.noise.kind) << " per-point\n";
  if (set.kind == DataKind::near) {
    os << "# near_height " << fmt(set.near_height) << "\n";
    os << "# near_halfwidth " << fmt(set.near_halfwidth) << "\n";
  }
  os << "# grid_count " << set.grid.size() << "\n";
  os << "# n_d " << set.n_d() << "\n";
  for (int l = 0; l < set.n_d(); ++l) {
    os << "# config " << l << " thetas";
    for (double th : set.incident[l].thetas)
      os << " " << fmt(th);
    os << "\n";
    const RealVector& v = set.values[l];
    for (int j = 0; j < set.grid.size(); ++j)
      os << j << " " << fmt(set.grid[j]) << " " << fmt(v[j]) << "\n";
  }
}

MeasurementSet read_measurement_set(std::istream& is) {
  MeasurementSet set;
  std::string line;
  int grid_count = -1, n_d = -1;
  int config = -1, row = 0;
  bool have_k = false;
  std::vector<std::vector<double>> theta_lists;
  while (std::getline(is, line)) {
    if (line.empty())
      continue;
    const std::vector<std::string> tok = tokenize(line);
    if (tok.empty())
      continue;
    if (tok[0] == "#") {
      if (tok.size() < 2)
        continue;
      const std::string& key = tok[1];
      if (key == "kind" && tok.size() >= 3) {
        set.kind = data_kind_from_string(tok[2]);
      } else if (key == "k" && tok.size() >= 3) {
        set.k = parse_double(tok[2], "k");
        have_k = true;
      } else if (key == "profile" && tok.size() >= 3) {
        set.profile_tag = tok[2];
      } else if (key == "eta" && tok.size() >= 3) {
        set.eta = parse_double(tok[2], "eta");
      } else if (key == "mesh_n" && tok.size() >= 3) {
        set.mesh_n = static_cast<int>(parse_double(tok[2], "mesh_n"));
      } else if (key == "delta" && tok.size() >= 3) {
        set.noise.delta = parse_double(tok[2], "delta");
      } else if (key == "seed" && tok.size() >= 3) {
        set.noise.seed = std::stoull(tok[2]);
      } else if (key == "noise" && tok.size() >= 3) {
        set.noise.kind = noise_kind_from_string(tok[2]);
      } else if (key == "near_height" && tok.size() >= 3) {
        set.near_height = parse_double(tok[2], "near_height");
      } else if (key == "near_halfwidth" && tok.size() >= 3) {
        set.near_halfwidth = parse_double(tok[2], "near_halfwidth");
      } else if (key == "grid_count" && tok.size() >= 3) {
        grid_count = static_cast<int>(parse_double(tok[2], "grid_count"));
        set.grid.resize(grid_count);
      } else if (key == "n_d" && tok.size() >= 3) {
        n_d = static_cast<int>(parse_double(tok[2], "n_d"));
      } else if (key == "config" && tok.size() >= 4) {
        if (grid_count < 0 || !have_k)
          throw std::runtime_error(
              "dataset parse: config block before grid_count/k headers");
        config = static_cast<int>(parse_double(tok[2], "config index"));
        if (config != static_cast<int>(theta_lists.size()))
          throw std::runtime_error("dataset parse: config blocks out of order");
        std::vector<double> th;
        for (std::size_t i = 4; i < tok.size(); ++i)
          th.push_back(parse_double(tok[i], "theta"));
        theta_lists.push_back(th);
        set.values.emplace_back(RealVector::Zero(grid_count));
        row = 0;
      }
      continue;
    }
    if (config < 0)
      throw std::runtime_error("dataset parse: data row outside config block");
    if (tok.size() != 3)
      throw std::runtime_error("dataset parse: expected 'index grid value'");
    if (row >= grid_count)
      throw std::runtime_error("dataset parse: too many rows in block");
    const int idx = static_cast<int>(parse_double(tok[0], "row index"));
    if (idx != row)
      throw std::runtime_error("dataset parse: row index out of order");
    const double g = parse_double(tok[1], "grid value");
    if (config == 0)
      set.grid[row] = g;
    else if (g != set.grid[row])
      throw std::runtime_error("dataset parse: grids differ between blocks");
    set.values.back()[row] = parse_double(tok[2], "intensity");
    ++row;
  }
  if (!have_k || grid_count < 0 || n_d < 0)
    throw std::runtime_error("dataset parse: missing required headers");
  if (static_cast<int>(theta_lists.size()) != n_d)
    throw std::runtime_error("dataset parse: config block count != n_d");
  if (row != grid_count)
    throw std::runtime_error("dataset parse: incomplete final block");
  for (const auto& th : theta_lists)
    set.incident.emplace_back(set.k, th);
  return set;
}

std::string measurement_filename(const MeasurementSet& set) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_k%g.txt", to_string(set.kind).c_str(),
                set.k);
  return buf;
}

std::vector<std::string> write_dataset(
    const std::string& dir, const std::vector<MeasurementSet>& sets) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const MeasurementSet& set : sets) {
    const std::string path =
        (std::filesystem::path(dir) / measurement_filename(set)).string();
    std::ofstream os(path);
    if (!os)
      throw std::runtime_error("cannot open for writing: " + path);
    write_measurement_set(os, set);
    if (!os.good())
      throw std::runtime_error("write failed: " + path);
    paths.push_back(path);
  }
  return paths;
}

std::vector<MeasurementSet> read_dataset(const std::vector<std::string>& paths) {
  std::vector<MeasurementSet> sets;
  for (const std::string& path : paths) {
    std::ifstream is(path);
    if (!is)
      throw std::runtime_error("cannot open dataset file: " + path);
    sets.push_back(read_measurement_set(is));
  }
  return sets;
}

} // namespace rsi
