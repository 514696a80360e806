#pragma once

#include <memory>

#include "rsi/geometry.hpp"
#include "rsi/waves.hpp"

namespace rsi {

// Default combined-field coupling: eta = max(1, k).
double default_coupling(double k);

// Dense collocation matrix of the boundary system
//   row on the surface arc:   phi + (K - i eta S) phi + (K~ - i eta S~) phi
//   row on the semicircle:  phi/2 + (K - i eta S) phi + (K~ - i eta S~) phi
// where K/S are the double/single layer over the whole contour and the
// tilde operators evaluate at the mirrored point for semicircle rows (on
// surface rows they coincide with K/S).  The log singularity is split
// against ln(4 sin^2) and integrated with the periodic log rule; diagonal
// entries carry the analytic limits.
struct SystemOperator {
  double k = 0.0;
  double eta = 0.0;
  std::shared_ptr<const BoundaryMesh> mesh;
  ComplexMatrix matrix;
  Eigen::PartialPivLU<ComplexMatrix> lu;
};

SystemOperator assemble_system(std::shared_ptr<const BoundaryMesh> mesh,
                               double k, double eta);

// Right-hand side -2(u^i + u^r) on surface rows, 0 on semicircle rows.
ComplexVector assemble_rhs(const BoundaryMesh& mesh, const IncidentConfig& cfg);
// Variant for a prescribed Dirichlet datum f on the surface segment
// (scattered field = f on the perturbed surface): 2 f on surface rows,
// 0 elsewhere.  f holds values at the n surface nodes.
ComplexVector assemble_rhs_dirichlet(const BoundaryMesh& mesh,
                                     const ComplexVector& f_surface);

struct DensitySolution {
  double k = 0.0;
  double eta = 0.0;
  std::shared_ptr<const BoundaryMesh> mesh;
  ComplexVector density;
  double residual = 0.0; // ||P phi - g||_inf / ||g||_inf
};

// Factor-once solve; rejects the solve when the verified residual exceeds
// 1e-10 (throws std::runtime_error).
DensitySolution solve_density(const SystemOperator& op,
                              const ComplexVector& rhs);

// Scattered field via the combined-layer representation; meaningful for x in
// the propagation domain, a few node spacings away from the contour.
Complex eval_scattered(const DensitySolution& sol, const Vec2& x);

// Far-field pattern at observation angles t in (0, pi), direction
// (cos t, sin t):
//   u^inf(t) = e^{-i pi/4}/sqrt(8 pi k) int [k nu.x^ + eta] e^{-ik x^.y} phi.
ComplexVector eval_far_field(const DensitySolution& sol,
                             const RealVector& angles);

// m equidistant points on [-L, L] x {H}.
RealVector near_grid(double L, int m);
// Total measurable near field u^r + u^s on the segment {x2 = H}; H must
// exceed the maximum surface height.
ComplexVector eval_near_field(const DensitySolution& sol,
                              const IncidentConfig& cfg, double H, double L,
                              int m);

// Kernel-split layer matrices on the mesh lattice (shared by the boundary
// flux computation).  `include_jacobian` selects whether the arclength
// factor |z'(tau)| multiplies the kernel (the bare variant integrates
// densities already expressed per unit of parameter).
ComplexMatrix single_layer_matrix(const BoundaryMesh& mesh, double k,
                                  bool include_jacobian);
// Kernel d Phi(x_i, y_j)/d nu(x_i) |z'(tau_j)| with its log split (adjoint
// double layer).
ComplexMatrix normal_derivative_single_layer_matrix(const BoundaryMesh& mesh,
                                                    double k);

} // namespace rsi
