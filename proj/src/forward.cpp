#include "rsi/forward.hpp"

#include <cmath>
#include <stdexcept>

#include "rsi/parallel.hpp"
#include "rsi/quadrature.hpp"
#include "rsi/special.hpp"

namespace rsi {
namespace {

constexpr double kEulerGamma = 0.57721566490153286;

inline double cross2(const Vec2& a, const Vec2& b) {
  return a[0] * b[1] - a[1] * b[0];
}

// Strong corner grading can place nodes closer to a corner than one ulp of
// the corner coordinate, so two distinct lattice nodes may round to the same
// point.  Such pairs carry Jacobians (hence true kernel contributions) far
// below machine precision: their entries are dropped.  Coincidence with an
// O(1) Jacobian is a genuine geometry error instead.
inline bool collapsed_pair(double r, double jac_a, double jac_b) {
  if (r != 0.0)
    return false;
  if (std::min(jac_a, jac_b) < 1e-12)
    return true;
  throw std::domain_error(
      "kernel assembly: coincident nodes with non-negligible Jacobian");
}

// One off-diagonal kernel evaluation, split against ln(4 sin^2((s-t)/2)).
// log_* multiplies the log rule weight, smooth_* the plain weight pi/n.
struct CombinedSplit {
  Complex log_part;
  Complex smooth_part;
};

// Combined double-minus-single layer kernel (K - i eta S)(x_i, y_j) in the
// graded parameter, Jacobian included.
CombinedSplit combined_layer_split(const BoundaryMesh& mesh, double k,
                                   double eta, int i, int j) {
  CombinedSplit out;
  if (i == j) {
    // Diagonal limits: the double-layer log coefficient vanishes and its
    // smooth part tends to the curvature term cross(z', z'')/(4 pi |z'|^2);
    // the single-layer split has log coefficient -jac/(4 pi) and smooth part
    // [i/4 - (gamma + log(k jac / 2))/(2 pi)] jac.
    const double jc = mesh.jac[i];
    const Complex s1(-jc / (4.0 * kPi), 0.0);
    const Complex s2 =
        (Complex(0.0, 0.25) -
         Complex((kEulerGamma + std::log(0.5 * k * jc)) / (2.0 * kPi), 0.0)) *
        jc;
    const double l2 =
        cross2(mesh.dz.col(i), mesh.ddz.col(i)) / (4.0 * kPi * jc * jc);
    out.log_part = -kImag * eta * s1;
    out.smooth_part = Complex(l2, 0.0) - kImag * eta * s2;
    return out;
  }
  const Vec2 diff = mesh.point.col(i) - mesh.point.col(j);
  const double r = diff.norm();
  if (collapsed_pair(r, mesh.jac[i], mesh.jac[j])) {
    out.log_part = Complex(0.0, 0.0);
    out.smooth_part = Complex(0.0, 0.0);
    return out;
  }
  const BesselQuad b = bessel_all(k * r);
  const double jc = mesh.jac[j];
  const Vec2 nuj_jac(-mesh.dz(1, j), mesh.dz(0, j));
  const double doty = diff.dot(nuj_jac);
  const double lnterm =
      2.0 * std::log(2.0 * std::abs(std::sin(0.5 * (mesh.sigma[i] - mesh.sigma[j]))));

  // single layer: (i/4) H0(kr) jac
  const Complex s1(-b.j0 * jc / (4.0 * kPi), 0.0);
  const Complex sfull = 0.25 * kImag * Complex(b.j0, b.y0) * jc;
  const Complex s2 = sfull - s1 * lnterm;
  // double layer: (ik/4) H1(kr) (x - y).nu~(y) / r
  const Complex l1(-k * b.j1 * doty / (4.0 * kPi * r), 0.0);
  const Complex lfull = 0.25 * kImag * k * Complex(b.j1, b.y1) * doty / r;
  const Complex l2 = lfull - l1 * lnterm;

  out.log_part = l1 - kImag * eta * s1;
  out.smooth_part = l2 - kImag * eta * s2;
  return out;
}

// Mirror-point kernel for semicircle rows: smooth in the integration
// variable (the mirrored point stays off the contour; the graded weights
// absorb the corner approach), so a single plain-weight value suffices.
Complex reflected_layer_value(const BoundaryMesh& mesh, double k, double eta,
                              const Vec2& xre, int j) {
  const Vec2 diff = xre - mesh.point.col(j);
  const double r = diff.norm();
  // Both kernel pieces carry the column Jacobian, so a collapsed column node
  // contributes nothing regardless of where the mirror point sits.
  if (collapsed_pair(r, mesh.jac[j], mesh.jac[j]))
    return Complex(0.0, 0.0);
  const BesselQuad b = bessel_all(k * r);
  const double jc = mesh.jac[j];
  const Vec2 nuj_jac(-mesh.dz(1, j), mesh.dz(0, j));
  const double doty = diff.dot(nuj_jac);
  const Complex dl = 0.25 * kImag * k * Complex(b.j1, b.y1) * doty / r;
  const Complex sl = 0.25 * kImag * Complex(b.j0, b.y0) * jc;
  return dl - kImag * eta * sl;
}

} // namespace

double default_coupling(double k) { return std::max(1.0, k); }

SystemOperator assemble_system(std::shared_ptr<const BoundaryMesh> mesh,
                               double k, double eta) {
  if (!mesh)
    throw std::invalid_argument("assemble_system: null mesh");
  if (!(k > 0.0) || !(eta > 0.0))
    throw std::invalid_argument("assemble_system: need k > 0 and eta > 0");

  const BoundaryMesh& m = *mesh;
  const int N = m.size();
  const double pw = kPi / m.n; // plain periodic weight
  const RealVector rw = log_rule_weights(m.n);

  SystemOperator op;
  op.k = k;
  op.eta = eta;
  op.mesh = mesh;
  op.matrix.resize(N, N);

  ComplexMatrix& a = op.matrix;
  parallel_for(N, [&](int i) {
    const bool surface_row = m.on_surface(i);
    const Vec2 xre = surface_row ? Vec2(m.point.col(i)) : reflect(m.point.col(i));
    for (int j = 0; j < N; ++j) {
      const CombinedSplit d = combined_layer_split(m, k, eta, i, j);
      Complex entry = d.log_part * rw[std::abs(i - j)] + d.smooth_part * pw;
      if (surface_row)
        entry *= 2.0; // mirrored operators coincide with the direct ones
      else
        entry += reflected_layer_value(m, k, eta, xre, j) * pw;
      a(i, j) = entry;
    }
    a(i, i) += surface_row ? 1.0 : 0.5;
  });

  op.lu.compute(op.matrix);
  return op;
}

ComplexVector assemble_rhs(const BoundaryMesh& mesh, const IncidentConfig& cfg) {
  cfg.validate();
  ComplexVector g = ComplexVector::Zero(mesh.size());
  for (int j = 0; j < mesh.n; ++j)
    g[j] = -2.0 * incident_plus_reflected(cfg, mesh.point.col(j));
  return g;
}

ComplexVector assemble_rhs_dirichlet(const BoundaryMesh& mesh,
                                     const ComplexVector& f_surface) {
  if (f_surface.size() != mesh.n)
    throw std::invalid_argument(
        "assemble_rhs_dirichlet: need one value per surface node");
  ComplexVector g = ComplexVector::Zero(mesh.size());
  g.head(mesh.n) = 2.0 * f_surface;
  return g;
}

DensitySolution solve_density(const SystemOperator& op,
                              const ComplexVector& rhs) {
  if (rhs.size() != op.matrix.rows())
    throw std::invalid_argument("solve_density: rhs size mismatch");
  DensitySolution sol;
  sol.k = op.k;
  sol.eta = op.eta;
  sol.mesh = op.mesh;
  sol.density = op.lu.solve(rhs);
  const double gnorm = rhs.lpNorm<Eigen::Infinity>();
  if (gnorm == 0.0) {
    sol.residual = 0.0;
    sol.density.setZero();
    return sol;
  }
  sol.residual =
      (op.matrix * sol.density - rhs).lpNorm<Eigen::Infinity>() / gnorm;
  if (!(sol.residual <= 1e-10))
    throw std::runtime_error(
        "solve_density: verified residual exceeds 1e-10 (matrix near-singular "
        "or assembly inconsistent)");
  return sol;
}

Complex eval_scattered(const DensitySolution& sol, const Vec2& x) {
  const BoundaryMesh& m = *sol.mesh;
  Complex u = 0.0;
  for (int j = 0; j < m.size(); ++j) {
    const Vec2 diff = x - Vec2(m.point.col(j));
    const double r = diff.norm();
    const BesselQuad b = bessel_all(sol.k * r);
    const double doty = diff.dot(m.normal.col(j));
    const Complex dl = 0.25 * kImag * sol.k * Complex(b.j1, b.y1) * doty / r;
    const Complex sl = 0.25 * kImag * Complex(b.j0, b.y0);
    u += (dl - kImag * sol.eta * sl) * sol.density[j] * m.weight[j];
  }
  return u;
}

ComplexVector eval_far_field(const DensitySolution& sol,
                             const RealVector& angles) {
  const BoundaryMesh& m = *sol.mesh;
  const double k = sol.k;
  const Complex amp =
      std::exp(Complex(0.0, -kPi / 4.0)) / std::sqrt(8.0 * kPi * k);
  ComplexVector out(angles.size());
  for (Eigen::Index a = 0; a < angles.size(); ++a) {
    const double t = angles[a];
    if (!(t > 0.0 && t < kPi))
      throw std::invalid_argument(
          "eval_far_field: observation angles must lie in (0, pi)");
    const Vec2 xhat(std::cos(t), std::sin(t));
    Complex s = 0.0;
    for (int j = 0; j < m.size(); ++j) {
      const double nu_dot = xhat.dot(m.normal.col(j));
      const Complex phase =
          std::exp(-kImag * k * xhat.dot(m.point.col(j)));
      s += (k * nu_dot + sol.eta) * phase * sol.density[j] * m.weight[j];
    }
    out[a] = amp * s;
  }
  return out;
}

RealVector near_grid(double L, int m) {
  if (m < 2 || !(L > 0.0))
    throw std::invalid_argument("near_grid: need m >= 2 and L > 0");
  RealVector x(m);
  for (int j = 0; j < m; ++j)
    x[j] = -L + 2.0 * L * j / (m - 1);
  return x;
}

ComplexVector eval_near_field(const DensitySolution& sol,
                              const IncidentConfig& cfg, double H, double L,
                              int m) {
  cfg.validate();
  if (!(H > sol.mesh->max_height))
    throw std::invalid_argument(
        "eval_near_field: segment height must exceed the surface maximum");
  const RealVector xs = near_grid(L, m);
  ComplexVector u(m);
  for (int j = 0; j < m; ++j) {
    const Vec2 x(xs[j], H);
    u[j] = reflected_field(cfg, x) + eval_scattered(sol, x);
  }
  return u;
}

ComplexMatrix single_layer_matrix(const BoundaryMesh& mesh, double k,
                                  bool include_jacobian) {
  const int N = mesh.size();
  const double pw = kPi / mesh.n;
  const RealVector rw = log_rule_weights(mesh.n);
  ComplexMatrix a(N, N);
  parallel_for(N, [&](int i) {
    for (int j = 0; j < N; ++j) {
      const double jc = include_jacobian ? mesh.jac[j] : 1.0;
      if (i == j) {
        const Complex s1(-jc / (4.0 * kPi), 0.0);
        const Complex s2 =
            (Complex(0.0, 0.25) -
             Complex((kEulerGamma + std::log(0.5 * k * mesh.jac[i])) /
                         (2.0 * kPi),
                     0.0)) *
            jc;
        a(i, i) = s1 * rw[0] + s2 * pw;
        continue;
      }
      const double r = (mesh.point.col(i) - mesh.point.col(j)).norm();
      // Without the Jacobian the entry is not suppressed at collapsed
      // pairs, so only the Jacobian-weighted variant may drop them.
      if (collapsed_pair(r, include_jacobian ? mesh.jac[i] : 1.0,
                         include_jacobian ? mesh.jac[j] : 1.0)) {
        a(i, j) = Complex(0.0, 0.0);
        continue;
      }
      const BesselQuad b = bessel_all(k * r);
      const double lnterm =
          2.0 * std::log(2.0 * std::abs(std::sin(
                             0.5 * (mesh.sigma[i] - mesh.sigma[j]))));
      const Complex s1(-b.j0 * jc / (4.0 * kPi), 0.0);
      const Complex sfull = 0.25 * kImag * Complex(b.j0, b.y0) * jc;
      a(i, j) = s1 * rw[std::abs(i - j)] + (sfull - s1 * lnterm) * pw;
    }
  });
  return a;
}

ComplexMatrix normal_derivative_single_layer_matrix(const BoundaryMesh& mesh,
                                                    double k) {
  const int N = mesh.size();
  const double pw = kPi / mesh.n;
  const RealVector rw = log_rule_weights(mesh.n);
  ComplexMatrix a(N, N);
  parallel_for(N, [&](int i) {
    const Vec2 nui = mesh.normal.col(i);
    for (int j = 0; j < N; ++j) {
      if (i == j) {
        const double l2 = cross2(mesh.dz.col(i), mesh.ddz.col(i)) /
                          (4.0 * kPi * mesh.jac[i] * mesh.jac[i]);
        a(i, i) = Complex(l2, 0.0) * pw;
        continue;
      }
      const Vec2 diff = mesh.point.col(i) - mesh.point.col(j);
      const double r = diff.norm();
      if (collapsed_pair(r, mesh.jac[i], mesh.jac[j])) {
        a(i, j) = Complex(0.0, 0.0);
        continue;
      }
      const BesselQuad b = bessel_all(k * r);
      const double dotx = diff.dot(nui);
      const double lnterm =
          2.0 * std::log(2.0 * std::abs(std::sin(
                             0.5 * (mesh.sigma[i] - mesh.sigma[j]))));
      const double jc = mesh.jac[j];
      // kernel -(ik/4) H1(kr) (x-y).nu(x)/r jac
      const Complex l1(k * b.j1 * dotx * jc / (4.0 * kPi * r), 0.0);
      const Complex lfull =
          -0.25 * kImag * k * Complex(b.j1, b.y1) * dotx * jc / r;
      a(i, j) = l1 * rw[std::abs(i - j)] + (lfull - l1 * lnterm) * pw;
    }
  });
  return a;
}

} // namespace rsi
