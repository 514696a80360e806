#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsi/forward.hpp"
#include "rsi/geometry.hpp"
#include "rsi/synth.hpp"

namespace rsi {

// Normal derivative of the total field u^i + u^r + u^s at the surface
// nodes: analytic gradient for the incident pair plus the normal-derivative
// trace of the combined layer potential, with the hypersingular part
// rewritten through tangential derivatives of single layers so every
// ingredient is an already-validated layer matrix.
ComplexVector boundary_normal_derivative(const DensitySolution& sol,
                                         const IncidentConfig& cfg);

// Everything reusable across Newton-step columns at one (surface, k): the
// mesh, the factorized boundary operator, and the flux machinery.  The
// derivative problems differ from the base solve only in their right-hand
// sides, so one factorization serves the base solve and all M columns for
// all incident configurations.
struct FrequencyWorkspace {
  SplineBasis basis;
  RealVector a;
  double k = 0.0;
  double eta = 0.0;
  std::shared_ptr<const BoundaryMesh> mesh;
  SystemOperator op;
};

FrequencyWorkspace make_workspace(const SplineBasis& basis,
                                  const RealVector& a, double k, int mesh_n);

// Base solve plus measured-quantity cache for one incident configuration of
// a measurement set.
struct ConfigSolution {
  DensitySolution sol;
  ComplexVector field;  // far: u^inf on the grid; near: u^r + u^s
  RealVector intensity; // |field|^2
  ComplexVector flux;   // du/dnu of the total field at surface nodes
};

ConfigSolution solve_config(const FrequencyWorkspace& ws,
                            const MeasurementSet& set, int l);

// Phaseless forward maps on a prescribed mesh resolution (the spline
// coefficients define the surface).
RealVector forward_map_far(const SplineBasis& basis, const RealVector& a,
                           const IncidentConfig& cfg, const RealVector& angles,
                           int mesh_n);
RealVector forward_map_near(const SplineBasis& basis, const RealVector& a,
                            const IncidentConfig& cfg, double H, double L,
                            int m, int mesh_n);

// Derivative of the intensity data with respect to coefficient i: solve the
// derivative problem with Dirichlet datum -(phi_i nu_2) du/dnu on the
// surface and return 2 Re[conj(u) u'] on the grid (far: far-field patterns;
// near: u' carries no reflected part since the incident pair is fixed).
RealVector frechet_column(const FrequencyWorkspace& ws,
                          const MeasurementSet& set,
                          const ConfigSolution& cs, int i);

// Stacked rows over (incident config, grid point), columns i = 1..M.
RealMatrix build_jacobian(const FrequencyWorkspace& ws,
                          const MeasurementSet& set,
                          const std::vector<ConfigSolution>& sols);
// Stacked prediction-minus-data residual in the same row order.
RealVector stacked_residual(const MeasurementSet& set,
                            const std::vector<ConfigSolution>& sols);

// Damped least-squares step: step(beta) = -(J^T J + beta I)^{-1} J^T r with
// beta > 0 chosen so that ||r + J step(beta)|| = rho ||r|| to 1e-8 of ||r||
// (the map beta -> linearized residual is nondecreasing, so a bracketed
// monotone search suffices).  When even the minimal-norm Gauss-Newton step
// cannot reach the target, the step at the beta floor is returned flagged
// `target_unreachable`.
struct LmResult {
  RealVector step;
  double beta = 0.0;
  bool target_unreachable = false;
};

LmResult lm_step(const RealMatrix& J, const RealVector& r, double rho);

// n_d-average of the relative l2 data misfits at one wavenumber.  Throws
// std::domain_error when a data vector is identically zero.
double err_k(const MeasurementSet& set, const std::vector<RealVector>& predicted);

struct InversionConfig {
  int M = 20;      // spline count
  double R = 2.0;  // basis support radius = truncation radius
  double rho = 0.8;
  double tau = 1.5;
  double delta = 0.05;   // assumed noise ratio; stop when Err <= tau*delta
  int max_inner = 25;    // per-frequency iteration cap
  double mesh_ratio = 1.0;
  RealVector initial;    // a0 (empty = zeros)

  void validate() const; // throws std::invalid_argument
};

struct IterationRecord {
  double k = 0.0;
  int iteration = 0;   // 0-based inner index
  double err = 0.0;    // Err_k at the start of the iteration
  double beta = 0.0;   // damping of the step taken (0 when none)
  double step_norm = 0.0;
  bool stepped = false;
  bool target_unreachable = false;
  std::string exit; // "", "converged", "cap", "unreachable", "diverged"
};

struct InversionState {
  RealVector a;
  int frequencies_done = 0;
  std::vector<IterationRecord> history;
};

// Recursion failure carrying the state reached so far for post-mortem.
struct InversionError : std::runtime_error {
  InversionError(const std::string& msg, InversionState s)
      : std::runtime_error(msg), state(std::move(s)) {}
  InversionState state;
};

// Frequency-recursive regularized Newton driver: ascend the wavenumbers,
// and at each one iterate (predict, test Err <= tau*delta, Jacobian, damped
// step) until convergence, the iteration cap, two consecutive unreachable
// damping targets, or three consecutive nonlinear-residual increases.
InversionState recursive_newton(const std::vector<MeasurementSet>& sets,
                                const InversionConfig& cfg);

} // namespace rsi
