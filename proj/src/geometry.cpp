#include "rsi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rsi {

double quartic_spline(double t, int deriv) {
  if (deriv < 0 || deriv > 3)
    throw std::invalid_argument("quartic_spline: deriv must be in 0..3");
  if (std::abs(t) >= 2.5)
    return 0.0;
  static const double binom[6] = {1, 5, 10, 10, 5, 1};
  // d^m/dt^m (u_+^4) = 4!/(4-m)! u_+^{4-m}
  static const double fall[4] = {1.0, 4.0, 12.0, 24.0};
  const int pw = 4 - deriv;
  double s = 0.0;
  for (int j = 0; j <= 5; ++j) {
    const double u = t + 2.5 - j;
    if (u <= 0.0)
      break; // u decreases with j
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    s += sgn * binom[j] * fall[deriv] * std::pow(u, pw);
  }
  return s / 24.0;
}

SplineBasis::SplineBasis(int M_, double R_) : M(M_), R(R_) {
  if (M < 1)
    throw std::invalid_argument("SplineBasis: M must be >= 1");
  if (!(R > 0.0))
    throw std::invalid_argument("SplineBasis: R must be > 0");
}

double SplineBasis::center(int i) const {
  if (i < 1 || i > M)
    throw std::invalid_argument("SplineBasis::center: index out of range");
  return (i + 2) * spacing() - R;
}

double SplineBasis::eval(int i, double x, int deriv) const {
  const double h = spacing();
  return quartic_spline((x - center(i)) / h, deriv) / std::pow(h, deriv);
}

// ---------------------------------------------------------------------------
// Profiles

class SurfaceProfile::Impl {
 public:
  virtual ~Impl() = default;
  virtual double value(double x, int deriv) const = 0;
  virtual double support_radius() const = 0;
  virtual std::string description() const = 0;
};

SurfaceProfile::SurfaceProfile(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

double SurfaceProfile::value(double x1, int deriv) const {
  if (!impl_)
    throw std::logic_error("SurfaceProfile: empty handle");
  if (deriv < 0 || deriv > 2)
    throw std::invalid_argument("SurfaceProfile: deriv must be in 0..2");
  return impl_->value(x1, deriv);
}

double SurfaceProfile::support_radius() const {
  if (!impl_)
    throw std::logic_error("SurfaceProfile: empty handle");
  return impl_->support_radius();
}

std::string SurfaceProfile::description() const {
  return impl_ ? impl_->description() : std::string("(none)");
}

namespace {

class FlatImpl final : public SurfaceProfile::Impl {
 public:
  double value(double, int) const override { return 0.0; }
  double support_radius() const override { return 0.0; }
  std::string description() const override { return "flat"; }
};

// Single bump phi((x + 0.2)/0.3): height 115/192 at x = -0.2, support
// (-0.95, 0.55).
class Example1Impl final : public SurfaceProfile::Impl {
 public:
  double value(double x, int deriv) const override {
    return quartic_spline((x + 0.2) / 0.3, deriv) / std::pow(0.3, deriv);
  }
  double support_radius() const override { return 0.95; }
  std::string description() const override { return "preset:example1"; }
};

// Multiscale bump exp(16/(25x^2-16)) (0.5 + 0.1 sin(16 pi x)) on |x| < 4/5,
// optionally carrying an extra sin(pi x) factor (the sign-changing variant).
class MultiscaleImpl final : public SurfaceProfile::Impl {
 public:
  explicit MultiscaleImpl(bool odd) : odd_(odd) {}

  double value(double x, int deriv) const override {
    const double b = 0.8;
    if (std::abs(x) >= b)
      return 0.0;
    // envelope e(x) = exp(16/(25 x^2 - 16)), q = 25 x^2 - 16 < 0
    const double q = 25.0 * x * x - 16.0;
    const double e = std::exp(16.0 / q);
    const double ep = e * (-800.0 * x / (q * q));
    const double wp = -800.0 / (q * q) + 80000.0 * x * x / (q * q * q);
    const double epp = ep * (-800.0 * x / (q * q)) + e * wp;

    const double g = 0.5 + 0.1 * std::sin(16.0 * kPi * x);
    const double gp = 1.6 * kPi * std::cos(16.0 * kPi * x);
    const double gpp = -25.6 * kPi * kPi * std::sin(16.0 * kPi * x);

    double v, vp, vpp; // e*g and derivatives
    v = e * g;
    vp = ep * g + e * gp;
    vpp = epp * g + 2.0 * ep * gp + e * gpp;

    if (odd_) {
      const double s = std::sin(kPi * x);
      const double sp = kPi * std::cos(kPi * x);
      const double spp = -kPi * kPi * std::sin(kPi * x);
      const double u = v * s;
      const double up = vp * s + v * sp;
      const double upp = vpp * s + 2.0 * vp * sp + v * spp;
      v = u;
      vp = up;
      vpp = upp;
    }
    return deriv == 0 ? v : (deriv == 1 ? vp : vpp);
  }
  double support_radius() const override { return 0.8; }
  std::string description() const override {
    return odd_ ? "preset:example5-multiscale" : "preset:example4-multiscale";
  }

 private:
  bool odd_;
};

class PiecewiseImpl final : public SurfaceProfile::Impl {
 public:
  explicit PiecewiseImpl(std::vector<Vec2> v) : v_(std::move(v)) {
    if (v_.size() < 2)
      throw std::invalid_argument("piecewise profile: need >= 2 vertices");
    for (size_t i = 1; i < v_.size(); ++i)
      if (!(v_[i][0] > v_[i - 1][0]))
        throw std::invalid_argument(
            "piecewise profile: x coordinates must be strictly increasing");
    if (v_.front()[1] != 0.0 || v_.back()[1] != 0.0)
      throw std::invalid_argument(
          "piecewise profile: end vertices must have height 0");
  }

  double value(double x, int deriv) const override {
    if (x <= v_.front()[0] || x >= v_.back()[0])
      return 0.0;
    size_t i = 1;
    while (v_[i][0] < x)
      ++i;
    const double slope =
        (v_[i][1] - v_[i - 1][1]) / (v_[i][0] - v_[i - 1][0]);
    if (deriv == 2)
      return 0.0; // kinks carry no usable curvature
    if (deriv == 1)
      return slope;
    return v_[i - 1][1] + slope * (x - v_[i - 1][0]);
  }
  double support_radius() const override {
    return std::max(std::abs(v_.front()[0]), std::abs(v_.back()[0]));
  }
  std::string description() const override {
    std::ostringstream os;
    os << "piecewise:";
    for (const auto& p : v_)
      os << p[0] << ":" << p[1] << ",";
    std::string s = os.str();
    s.pop_back();
    return s;
  }

 private:
  std::vector<Vec2> v_;
};

class SplineImpl final : public SurfaceProfile::Impl {
 public:
  SplineImpl(SplineBasis basis, RealVector a) : basis_(basis), a_(std::move(a)) {
    if (a_.size() != basis_.M)
      throw std::invalid_argument("spline profile: coefficient count != M");
  }

  double value(double x, int deriv) const override {
    // Only ~5 members overlap any x; a linear scan is fine at these sizes.
    double s = 0.0;
    for (int i = 1; i <= basis_.M; ++i) {
      if (std::abs(x - basis_.center(i)) < 2.5 * basis_.spacing())
        s += a_[i - 1] * basis_.eval(i, x, deriv);
    }
    return s;
  }
  double support_radius() const override {
    return std::max(std::abs(basis_.center(1) - 2.5 * basis_.spacing()),
                    std::abs(basis_.center(basis_.M) + 2.5 * basis_.spacing()));
  }
  std::string description() const override {
    std::ostringstream os;
    os << "spline:M=" << basis_.M << ":R=" << basis_.R << ":a=";
    for (int i = 0; i < a_.size(); ++i)
      os << (i ? "," : "") << a_[i];
    return os.str();
  }

 private:
  SplineBasis basis_;
  RealVector a_;
};

class ShiftedImpl final : public SurfaceProfile::Impl {
 public:
  ShiftedImpl(SurfaceProfile base, double ell) : base_(std::move(base)), ell_(ell) {}
  double value(double x, int deriv) const override {
    return base_.value(x - ell_, deriv);
  }
  double support_radius() const override {
    return base_.support_radius() + std::abs(ell_);
  }
  std::string description() const override {
    std::ostringstream os;
    os << "shifted:" << ell_ << ":" << base_.description();
    return os.str();
  }

 private:
  SurfaceProfile base_;
  double ell_;
};

class PerturbedImpl final : public SurfaceProfile::Impl {
 public:
  PerturbedImpl(SurfaceProfile base, SplineBasis basis, RealVector a)
      : base_(std::move(base)), delta_(basis, std::move(a)) {}
  double value(double x, int deriv) const override {
    return base_.value(x, deriv) + delta_.value(x, deriv);
  }
  double support_radius() const override {
    return std::max(base_.support_radius(), delta_.support_radius());
  }
  std::string description() const override {
    return "perturbed:" + base_.description() + "+" + delta_.description();
  }

 private:
  SurfaceProfile base_;
  SplineImpl delta_;
};

const std::vector<Vec2> kPiecewiseStandIn = {
    {-0.8, 0.0}, {-0.4, 0.4}, {0.0, 0.1}, {0.3, 0.35}, {0.8, 0.0}};

} // namespace

SurfaceProfile flat_profile() {
  return SurfaceProfile(std::make_shared<FlatImpl>());
}

SurfaceProfile preset_profile(const std::string& name) {
  if (name == "flat")
    return flat_profile();
  if (name == "example1")
    return SurfaceProfile(std::make_shared<Example1Impl>());
  if (name == "example3-piecewise")
    return piecewise_profile(kPiecewiseStandIn);
  if (name == "example4-multiscale")
    return SurfaceProfile(std::make_shared<MultiscaleImpl>(false));
  if (name == "example5-multiscale")
    return SurfaceProfile(std::make_shared<MultiscaleImpl>(true));
  throw std::invalid_argument("unknown profile preset: " + name);
}

SurfaceProfile piecewise_profile(const std::vector<Vec2>& vertices) {
  return SurfaceProfile(std::make_shared<PiecewiseImpl>(vertices));
}

SurfaceProfile spline_profile(const SplineBasis& basis, const RealVector& a) {
  return SurfaceProfile(std::make_shared<SplineImpl>(basis, a));
}

SurfaceProfile shifted_profile(const SurfaceProfile& base, double ell) {
  return SurfaceProfile(std::make_shared<ShiftedImpl>(base, ell));
}

SurfaceProfile perturbed_profile(const SurfaceProfile& base,
                                 const SplineBasis& basis,
                                 const RealVector& a) {
  return SurfaceProfile(std::make_shared<PerturbedImpl>(base, basis, a));
}

// ---------------------------------------------------------------------------
// Mesh

namespace {

// Kress grading on [0, 2pi]: w(0) = 0, w(pi) = pi, w(2pi) = 2pi, with
// derivatives through order p-1 vanishing at 0 and 2pi.  Cubic core
// v(s) = (1/p - 1/2)((pi-s)/pi)^3 + (1/p)(s-pi)/pi + 1/2,
// w = 2pi v^p / (v^p + v(2pi-s)^p).
struct Graded {
  double w, dw, ddw;
};

Graded kress_w(double s, int p) {
  auto vfun = [p](double t, double& v, double& dv, double& ddv) {
    const double c = 1.0 / p - 0.5;
    const double u = (kPi - t) / kPi;
    v = c * u * u * u + (t - kPi) / (p * kPi) + 0.5;
    dv = -3.0 * c * u * u / kPi + 1.0 / (p * kPi);
    ddv = 6.0 * c * u / (kPi * kPi);
  };
  double v, dv, ddv, vb, dvb, ddvb;
  vfun(s, v, dv, ddv);
  vfun(2.0 * kPi - s, vb, dvb, ddvb);
  // F = v^p, G = v(2pi-s)^p as functions of s
  const double f = std::pow(v, p);
  const double df = p * std::pow(v, p - 1) * dv;
  const double ddf =
      p * (p - 1) * std::pow(v, p - 2) * dv * dv + p * std::pow(v, p - 1) * ddv;
  const double g = std::pow(vb, p);
  const double dg = -p * std::pow(vb, p - 1) * dvb;
  const double ddg = p * (p - 1) * std::pow(vb, p - 2) * dvb * dvb +
                     p * std::pow(vb, p - 1) * ddvb;
  const double den = f + g;
  Graded out;
  out.w = 2.0 * kPi * f / den;
  out.dw = 2.0 * kPi * (df * g - f * dg) / (den * den);
  out.ddw = 2.0 * kPi *
            ((ddf * g - f * ddg) * den - 2.0 * (df * g - f * dg) * (df + dg)) /
            (den * den * den);
  return out;
}

// Per-arc substitution [0, pi] -> [0, pi], graded at both ends.
Graded arc_substitution(double s, int p) {
  Graded g = kress_w(2.0 * s, p);
  return {0.5 * g.w, g.dw, 2.0 * g.ddw};
}

} // namespace

bool BoundaryMesh::near_corner(int j, int count) const {
  const int m = j % n; // position within its sub-arc
  return m < count || m >= n - count;
}

BoundaryMesh build_mesh(const SurfaceProfile& profile, double R, int n,
                        int grading) {
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("build_mesh: n must be even and >= 8");
  if (grading < 2)
    throw std::invalid_argument("build_mesh: grading order must be >= 2");
  if (!(R > 0.0))
    throw std::invalid_argument("build_mesh: R must be > 0");
  if (!(profile.support_radius() < R))
    throw std::invalid_argument(
        "build_mesh: profile support must lie strictly inside (-R, R)");

  BoundaryMesh mesh;
  mesh.n = n;
  mesh.R = R;
  mesh.grading = grading;
  const int N = 2 * n;
  mesh.sigma.resize(N);
  mesh.point.resize(2, N);
  mesh.dz.resize(2, N);
  mesh.ddz.resize(2, N);
  mesh.jac.resize(N);
  mesh.normal.resize(2, N);
  mesh.weight.resize(N);
  mesh.profile = profile;
  mesh.max_height = 0.0;

  const double step = kPi / n;
  for (int j = 0; j < N; ++j) {
    const double sigma = (j + 0.5) * step;
    mesh.sigma[j] = sigma;
    Vec2 z, dz, ddz;
    if (j < n) {
      // surface arc: s in (0, pi), x1 = -R + (2R/pi) s
      const Graded sub = arc_substitution(sigma, grading);
      const double scale = 2.0 * R / kPi;
      const double x1 = -R + scale * sub.w;
      const double dx1 = scale * sub.dw;
      const double ddx1 = scale * sub.ddw;
      const double h = profile.value(x1, 0);
      const double hp = profile.value(x1, 1);
      const double hpp = profile.value(x1, 2);
      z = {x1, h};
      dz = {dx1, hp * dx1};
      ddz = {ddx1, hpp * dx1 * dx1 + hp * ddx1};
      // Corner nodes approach (+-R, 0) on the disk itself; only a live
      // perturbation can push the graph outside.
      if (h != 0.0 && x1 * x1 + h * h >= R * R)
        throw std::invalid_argument(
            "build_mesh: surface graph leaves the truncation disk");
      mesh.max_height = std::max(mesh.max_height, h);
    } else {
      // circle arc: polar angle psi = 2pi - s_local runs 2pi -> pi
      const Graded sub = arc_substitution(sigma - kPi, grading);
      const double psi = 2.0 * kPi - sub.w;
      const double c = std::cos(psi), s = std::sin(psi);
      z = {R * c, R * s};
      dz = {R * s * sub.dw, -R * c * sub.dw};
      ddz = {R * (s * sub.ddw - c * sub.dw * sub.dw),
             R * (-c * sub.ddw - s * sub.dw * sub.dw)};
    }
    mesh.point.col(j) = z;
    mesh.dz.col(j) = dz;
    mesh.ddz.col(j) = ddz;
    const double jj = dz.norm();
    mesh.jac[j] = jj;
    mesh.normal.col(j) = Vec2(-dz[1], dz[0]) / jj;
    mesh.weight[j] = jj * step;
  }
  return mesh;
}

} // namespace rsi
