#include "rsi/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "rsi/quadrature.hpp"
#include "rsi/waves.hpp"

namespace rsi {

namespace {

int round_up_even(double v) {
  int n = static_cast<int>(std::ceil(v));
  if (n % 2 != 0)
    ++n;
  return n;
}

ComplexVector near_total_field(const DensitySolution& sol,
                               const IncidentConfig& cfg,
                               const RealVector& xs, double H) {
  if (!(H > sol.mesh->max_height))
    throw std::invalid_argument(
        "near prediction: segment height must exceed the surface maximum");
  ComplexVector u(xs.size());
  for (int j = 0; j < xs.size(); ++j) {
    const Vec2 x(xs[j], H);
    u[j] = reflected_field(cfg, x) + eval_scattered(sol, x);
  }
  return u;
}

ComplexVector near_derivative_field(const DensitySolution& sol,
                                    const RealVector& xs, double H) {
  ComplexVector u(xs.size());
  for (int j = 0; j < xs.size(); ++j)
    u[j] = eval_scattered(sol, Vec2(xs[j], H));
  return u;
}

} // namespace

ComplexVector boundary_normal_derivative(const DensitySolution& sol,
                                         const IncidentConfig& cfg) {
  if (!sol.mesh)
    throw std::invalid_argument("boundary_normal_derivative: empty solution");
  const BoundaryMesh& m = *sol.mesh;
  const int N = m.size();
  const double k = sol.k;

  // Hypersingular trace of the double layer via tangential derivatives:
  //   d/ds S[dphi/ds] + k^2 nu . S[nu phi],
  // with d/ds = (1/|z'|) d/dsigma and the bare single layer absorbing the
  // 1/|z'| of the inner derivative against the arclength element.
  const RealMatrix D = periodic_diff_matrix(N);
  const ComplexVector dphi = D * sol.density;
  const ComplexVector s_dphi = single_layer_matrix(m, k, false) * dphi;
  const ComplexVector t_hyper = D * s_dphi;

  const ComplexMatrix Sjac = single_layer_matrix(m, k, true);
  ComplexVector v1(N), v2(N);
  for (int j = 0; j < N; ++j) {
    v1[j] = m.normal(0, j) * sol.density[j];
    v2[j] = m.normal(1, j) * sol.density[j];
  }
  const ComplexVector sv1 = Sjac * v1;
  const ComplexVector sv2 = Sjac * v2;

  // Exterior normal derivative of the single layer: K' phi - phi/2.
  const ComplexVector kp =
      normal_derivative_single_layer_matrix(m, k) * sol.density;

  ComplexVector out(m.n);
  for (int j = 0; j < m.n; ++j) {
    const Complex dl = t_hyper[j] / m.jac[j] +
                       k * k * (m.normal(0, j) * sv1[j] + m.normal(1, j) * sv2[j]);
    const Complex sl = kp[j] - 0.5 * sol.density[j];
    const CVec2 gi = grad_incident_plus_reflected(cfg, m.point.col(j));
    const Complex inc = gi[0] * m.normal(0, j) + gi[1] * m.normal(1, j);
    out[j] = inc + dl - kImag * sol.eta * sl;
  }
  return out;
}

FrequencyWorkspace make_workspace(const SplineBasis& basis,
                                  const RealVector& a, double k, int mesh_n) {
  if (a.size() != basis.M)
    throw std::invalid_argument(
        "make_workspace: coefficient count must match the basis");
  FrequencyWorkspace ws;
  ws.basis = basis;
  ws.a = a;
  ws.k = k;
  ws.eta = default_coupling(k);
  ws.mesh = std::make_shared<BoundaryMesh>(
      build_mesh(spline_profile(basis, a), basis.R, mesh_n));
  ws.op = assemble_system(ws.mesh, k, ws.eta);
  return ws;
}

ConfigSolution solve_config(const FrequencyWorkspace& ws,
                            const MeasurementSet& set, int l) {
  if (l < 0 || l >= set.n_d())
    throw std::invalid_argument("solve_config: config index out of range");
  if (set.k != ws.k)
    throw std::invalid_argument(
        "solve_config: workspace and measurement wavenumbers differ");
  const IncidentConfig& cfg = set.incident[l];
  ConfigSolution cs;
  cs.sol = solve_density(ws.op, assemble_rhs(*ws.mesh, cfg));
  cs.field = set.kind == DataKind::far
                 ? eval_far_field(cs.sol, set.grid)
                 : near_total_field(cs.sol, cfg, set.grid, set.near_height);
  cs.intensity = cs.field.cwiseAbs2();
  cs.flux = boundary_normal_derivative(cs.sol, cfg);
  return cs;
}

RealVector forward_map_far(const SplineBasis& basis, const RealVector& a,
                           const IncidentConfig& cfg, const RealVector& angles,
                           int mesh_n) {
  const FrequencyWorkspace ws = make_workspace(basis, a, cfg.k, mesh_n);
  const DensitySolution sol =
      solve_density(ws.op, assemble_rhs(*ws.mesh, cfg));
  return eval_far_field(sol, angles).cwiseAbs2();
}

RealVector forward_map_near(const SplineBasis& basis, const RealVector& a,
                            const IncidentConfig& cfg, double H, double L,
                            int m, int mesh_n) {
  const FrequencyWorkspace ws = make_workspace(basis, a, cfg.k, mesh_n);
  const DensitySolution sol =
      solve_density(ws.op, assemble_rhs(*ws.mesh, cfg));
  return near_total_field(sol, cfg, near_grid(L, m), H).cwiseAbs2();
}

RealVector frechet_column(const FrequencyWorkspace& ws,
                          const MeasurementSet& set,
                          const ConfigSolution& cs, int i) {
  if (i < 0 || i >= ws.basis.M)
    throw std::invalid_argument("frechet_column: basis index out of range");
  const BoundaryMesh& m = *ws.mesh;
  // Dirichlet datum of the derivative problem: f = -(Dh nu_2) du/dnu with
  // Dh the basis bump (1-based spline indexing).
  ComplexVector f(m.n);
  for (int j = 0; j < m.n; ++j)
    f[j] = -(ws.basis.eval(i + 1, m.point(0, j)) * m.normal(1, j)) *
           cs.flux[j];
  const DensitySolution dsol =
      solve_density(ws.op, assemble_rhs_dirichlet(m, f));
  const ComplexVector du =
      set.kind == DataKind::far
          ? eval_far_field(dsol, set.grid)
          : near_derivative_field(dsol, set.grid, set.near_height);
  return 2.0 * (cs.field.conjugate().cwiseProduct(du)).real();
}

RealMatrix build_jacobian(const FrequencyWorkspace& ws,
                          const MeasurementSet& set,
                          const std::vector<ConfigSolution>& sols) {
  if (static_cast<int>(sols.size()) != set.n_d())
    throw std::invalid_argument("build_jacobian: need one solution per config");
  const int gc = static_cast<int>(set.grid.size());
  RealMatrix J(set.n_d() * gc, ws.basis.M);
  for (int l = 0; l < set.n_d(); ++l)
    for (int i = 0; i < ws.basis.M; ++i)
      J.block(l * gc, i, gc, 1) = frechet_column(ws, set, sols[l], i);
  return J;
}

RealVector stacked_residual(const MeasurementSet& set,
                            const std::vector<ConfigSolution>& sols) {
  if (static_cast<int>(sols.size()) != set.n_d())
    throw std::invalid_argument(
        "stacked_residual: need one solution per config");
  const int gc = static_cast<int>(set.grid.size());
  RealVector r(set.n_d() * gc);
  for (int l = 0; l < set.n_d(); ++l)
    r.segment(l * gc, gc) = sols[l].intensity - set.values[l];
  return r;
}

LmResult lm_step(const RealMatrix& J, const RealVector& r, double rho) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("lm_step: rho must lie in (0, 1)");
  if (!J.allFinite() || !r.allFinite())
    throw std::invalid_argument("lm_step: non-finite entries");
  if (J.rows() != r.size())
    throw std::invalid_argument("lm_step: row count mismatch");
  const int M = static_cast<int>(J.cols());
  LmResult out;
  const double rnorm = r.norm();
  if (rnorm == 0.0) {
    out.step = RealVector::Zero(M);
    out.beta = 1.0;
    return out;
  }
  const RealMatrix JtJ = J.transpose() * J;
  const RealVector Jtr = J.transpose() * r;
  const double scale = std::max(JtJ.diagonal().maxCoeff(), 0.0);
  const double beta_floor = std::max(1e-14 * std::max(scale, 1.0), 1e-290);

  const auto step_at = [&](double beta) {
    RealMatrix A = JtJ;
    A.diagonal().array() += beta;
    return RealVector(Eigen::LDLT<RealMatrix>(A).solve(-Jtr));
  };
  const auto resid_at = [&](const RealVector& s) { return (r + J * s).norm(); };

  const double target = rho * rnorm;
  const double tol = 1e-8 * rnorm;

  RealVector s = step_at(beta_floor);
  double f = resid_at(s);
  if (f > target + tol) {
    // Even the (near) minimal-norm Gauss-Newton step cannot reach the
    // requested contraction: rank-deficient or exhausted model.
    out.step = s;
    out.beta = beta_floor;
    out.target_unreachable = true;
    return out;
  }

  double lo = beta_floor;
  double hi = std::max(scale, 1.0);
  s = step_at(hi);
  f = resid_at(s);
  int guard = 0;
  while (f < target - tol && guard++ < 300) {
    hi *= 4.0;
    s = step_at(hi);
    f = resid_at(s);
  }
  double beta = hi;
  for (int it = 0; it < 300 && std::abs(f - target) > tol; ++it) {
    beta = std::sqrt(lo * hi);
    s = step_at(beta);
    f = resid_at(s);
    (f > target ? hi : lo) = beta;
  }
  out.step = s;
  out.beta = beta;
  return out;
}

double err_k(const MeasurementSet& set,
             const std::vector<RealVector>& predicted) {
  if (static_cast<int>(predicted.size()) != set.n_d() || set.n_d() == 0)
    throw std::invalid_argument("err_k: need one prediction per config");
  double acc = 0.0;
  for (int l = 0; l < set.n_d(); ++l) {
    const double dn = set.values[l].norm();
    if (dn == 0.0)
      throw std::domain_error("err_k: identically zero data vector");
    acc += (predicted[l] - set.values[l]).norm() / dn;
  }
  return acc / set.n_d();
}

void InversionConfig::validate() const {
  if (M < 1)
    throw std::invalid_argument("inversion config: need at least one spline");
  if (!(R > 0.0))
    throw std::invalid_argument("inversion config: R must be positive");
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("inversion config: rho must lie in (0, 1)");
  if (!(tau > 1.0))
    throw std::invalid_argument("inversion config: tau must exceed 1");
  if (delta < 0.0)
    throw std::invalid_argument("inversion config: negative noise level");
  if (max_inner < 1)
    throw std::invalid_argument("inversion config: need max_inner >= 1");
  if (!(mesh_ratio >= 1.0))
    throw std::invalid_argument("inversion config: mesh_ratio must be >= 1");
  if (initial.size() != 0 && initial.size() != M)
    throw std::invalid_argument(
        "inversion config: initial guess length must equal M");
}

InversionState recursive_newton(const std::vector<MeasurementSet>& sets,
                                const InversionConfig& cfg) {
  cfg.validate();
  if (sets.empty())
    throw std::invalid_argument("recursive_newton: no measurement sets");
  std::vector<const MeasurementSet*> ordered;
  for (const MeasurementSet& s : sets)
    ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const MeasurementSet* a, const MeasurementSet* b) {
              return a->k < b->k;
            });
  for (std::size_t i = 1; i < ordered.size(); ++i)
    if (!(ordered[i]->k > ordered[i - 1]->k))
      throw std::invalid_argument(
          "recursive_newton: wavenumbers must be distinct");

  const SplineBasis basis(cfg.M, cfg.R);
  InversionState st;
  st.a = cfg.initial.size() ? cfg.initial : RealVector::Zero(cfg.M);

  try {
    for (const MeasurementSet* setp : ordered) {
      const MeasurementSet& set = *setp;
      const int mesh_n =
          round_up_even(mesh_size_policy(set.k, cfg.R) * cfg.mesh_ratio);
      double prev_err = std::numeric_limits<double>::infinity();
      int increases = 0;
      int unreachable_run = 0;
      for (int it = 0;; ++it) {
        const FrequencyWorkspace ws =
            make_workspace(basis, st.a, set.k, mesh_n);
        std::vector<ConfigSolution> sols;
        std::vector<RealVector> predicted;
        for (int l = 0; l < set.n_d(); ++l) {
          sols.push_back(solve_config(ws, set, l));
          predicted.push_back(sols.back().intensity);
        }
        const double err = err_k(set, predicted);

        IterationRecord rec;
        rec.k = set.k;
        rec.iteration = it;
        rec.err = err;
        if (err <= cfg.tau * cfg.delta) {
          rec.exit = "converged";
          st.history.push_back(rec);
          break;
        }
        if (it >= cfg.max_inner) {
          rec.exit = "cap";
          st.history.push_back(rec);
          break;
        }
        if (err > prev_err) {
          if (++increases >= 3) {
            rec.exit = "diverged";
            st.history.push_back(rec);
            break;
          }
        } else {
          increases = 0;
        }
        prev_err = err;

        const RealMatrix J = build_jacobian(ws, set, sols);
        const RealVector r = stacked_residual(set, sols);
        const LmResult lm = lm_step(J, r, cfg.rho);
        st.a += lm.step;
        rec.stepped = true;
        rec.beta = lm.beta;
        rec.step_norm = lm.step.norm();
        rec.target_unreachable = lm.target_unreachable;
        if (lm.target_unreachable) {
          if (++unreachable_run >= 2) {
            rec.exit = "unreachable";
            st.history.push_back(rec);
            break;
          }
        } else {
          unreachable_run = 0;
        }
        st.history.push_back(rec);
      }
      ++st.frequencies_done;
    }
  } catch (const std::exception& e) {
    throw InversionError(std::string("inversion aborted: ") + e.what(), st);
  }
  return st;
}

} // namespace rsi
