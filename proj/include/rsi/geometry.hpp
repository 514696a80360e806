#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rsi/types.hpp"

namespace rsi {

// Centered quartic B-spline
//   phi(t) = sum_{j=0}^{5} ((-1)^j / 24) C(5,j) (t + 5/2 - j)_+^4,
// supported on (-5/2, 5/2), C^3, phi(0) = 115/192, integral 1.
// deriv in {0,1,2,3}.
double quartic_spline(double t, int deriv = 0);

// Dilated B-spline family on (-R, R): h = 2R/(M+5), centers t_i = (i+2)h - R
// for i = 1..M, phi_i(x) = phi((x - t_i)/h).  Every member is supported
// strictly inside (-R, R).
struct SplineBasis {
  int M = 0;
  double R = 1.0;

  SplineBasis() = default;
  SplineBasis(int M_, double R_);

  double spacing() const { return 2.0 * R / (M + 5); }
  double center(int i) const; // i in 1..M
  // d^deriv/dx^deriv phi_i(x); scaling brings a 1/h factor per order.
  double eval(int i, double x, int deriv = 0) const;
};

// Perturbation profile x2 = h(x1) of the reflecting plane: compactly
// supported, evaluable with two derivatives.  Value-semantic handle.
class SurfaceProfile {
 public:
  class Impl;
  SurfaceProfile() = default;
  explicit SurfaceProfile(std::shared_ptr<const Impl> impl);

  // d^deriv h / dx1^deriv, deriv in {0,1,2}; exactly 0 outside the support.
  double value(double x1, int deriv = 0) const;
  // Radius r with supp(h) inside (-r, r).
  double support_radius() const;
  // Human/machine readable tag used in dataset headers and manifests.
  std::string description() const;
  bool valid() const { return impl_ != nullptr; }

 private:
  std::shared_ptr<const Impl> impl_;
};

SurfaceProfile flat_profile();
// Named presets: "flat", "example1", "example3-piecewise",
// "example4-multiscale", "example5-multiscale".  Throws std::invalid_argument
// for unknown names.
SurfaceProfile preset_profile(const std::string& name);
// Piecewise-linear graph through (x_i, y_i); first and last y must be 0.
SurfaceProfile piecewise_profile(const std::vector<Vec2>& vertices);
// h(x) = sum a_i phi_i(x).
SurfaceProfile spline_profile(const SplineBasis& basis, const RealVector& a);
// h_ell(x) = h(x - ell), the profile of the translated surface.
SurfaceProfile shifted_profile(const SurfaceProfile& base, double ell);
// base + sum a_i phi_i (used to probe derivative directions around a preset).
SurfaceProfile perturbed_profile(const SurfaceProfile& base,
                                 const SplineBasis& basis, const RealVector& a);

// Mirror image across the unperturbed plane {x2 = 0}.
inline Vec2 reflect(const Vec2& x) { return {x[0], -x[1]}; }

// Discretisation of the closed contour bounding the truncated lower domain:
// the perturbed surface segment over [-R, R] joined to the lower semicircle
// of radius R.  Parameterised over [0, 2pi] (surface on [0, pi], circle on
// [pi, 2pi]) with a polynomial grading of order `grading` at the two
// junction corners (-R, 0), (R, 0); nodes sit on a midpoint-shifted
// equidistant lattice in the graded parameter, so corners are never nodes.
struct BoundaryMesh {
  int n = 0;       // nodes per sub-arc; 2n total
  double R = 1.0;  // truncation radius
  int grading = 8; // grading order p at the corners

  RealVector sigma;        // parameter values, size 2n
  Eigen::Matrix2Xd point;  // z(sigma_j)
  Eigen::Matrix2Xd dz;     // z'(sigma_j)
  Eigen::Matrix2Xd ddz;    // z''(sigma_j)
  RealVector jac;          // |z'(sigma_j)| (> 0)
  Eigen::Matrix2Xd normal; // unit outward normal of the lower domain
  RealVector weight;       // jac * pi/n (plain quadrature weight)

  SurfaceProfile profile;
  double max_height = 0.0; // max of h over the surface nodes

  int size() const { return 2 * n; }
  bool on_surface(int j) const { return j < n; }
  // True within `count` nodes of either corner (metadata for diagnostics).
  bool near_corner(int j, int count = 3) const;
};

// Assembles the graded mesh.  Requires n >= 8 even, grading >= 2, and the
// profile supported strictly inside (-R, R) with its graph inside the disk
// of radius R; violations throw std::invalid_argument.
BoundaryMesh build_mesh(const SurfaceProfile& profile, double R, int n,
                        int grading = 8);

} // namespace rsi
