#include "rsi/special.hpp"

#include <cmath>
#include <stdexcept>

namespace rsi {
namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;
constexpr long double kEulerGamma = 0.57721566490153286060651209008240243L;

// Power-series / asymptotic-series crossover.  The truncated Hankel expansion
// bottoms out near 1e-13 at z = 14 (80-bit accumulation), while the power
// series still has ~6 digits of headroom there; below 14 the asymptotic side
// degrades quickly, above ~17 the series side does.
constexpr double kSeriesLimit = 14.0;

struct JyPair {
  long double j0, y0, j1, y1;
};

// Ascending series. q = z^2/4 throughout; harmonic numbers enter the Y sums.
JyPair series_small(long double z) {
  const long double q = z * z / 4.0L;
  const long double logterm = std::log(z / 2.0L) + kEulerGamma;

  // J0 = sum (-q)^m / (m!)^2, and the companion sum with harmonic weights
  // that builds Y0.
  long double j0 = 1.0L, y0sum = 0.0L;
  {
    long double term = 1.0L, harmonic = 0.0L;
    for (int m = 1; m < 200; ++m) {
      term *= -q / (static_cast<long double>(m) * m);
      harmonic += 1.0L / m;
      j0 += term;
      y0sum -= term * harmonic; // (-1)^{m+1} H_m q^m/(m!)^2
      if (std::abs(term) * (harmonic + 1.0L) < 1e-24L * (std::abs(j0) + 1.0L))
        break;
    }
  }
  const long double y0 = (2.0L / kPiL) * (logterm * j0 + y0sum);

  // J1 = (z/2) sum (-q)^m / (m!(m+1)!); Y1 companion carries H_m + H_{m+1}.
  long double j1s = 1.0L, y1sum = 1.0L; // m = 0 terms (H_0 + H_1 = 1)
  {
    long double term = 1.0L, hm = 0.0L, hm1 = 1.0L;
    for (int m = 1; m < 200; ++m) {
      term *= -q / (static_cast<long double>(m) * (m + 1));
      hm += 1.0L / m;
      hm1 += 1.0L / (m + 1);
      j1s += term;
      y1sum += term * (hm + hm1);
      if (std::abs(term) * (hm + hm1 + 1.0L) < 1e-24L * (std::abs(j1s) + 1.0L))
        break;
    }
  }
  const long double j1 = (z / 2.0L) * j1s;
  const long double y1 = (2.0L / kPiL) * logterm * j1 - 2.0L / (kPiL * z) -
                         (z / (2.0L * kPiL)) * y1sum;
  return {j0, y0, j1, y1};
}

// Hankel expansion: J_nu = amp (P cos chi - Q sin chi),
// Y_nu = amp (P sin chi + Q cos chi) with chi = z - (2 nu + 1) pi/4.
// P collects even terms, Q odd terms of t_m -> t_{m-1} (mu-(2m-1)^2)/(8 m z),
// truncated at the smallest term.
JyPair asymptotic_large(long double z) {
  auto pq = [z](long double mu, long double& p, long double& q) {
    p = 1.0L;
    q = 0.0L;
    long double term = 1.0L, prev = 1e30L;
    for (int m = 1; m < 60; ++m) {
      const long double odd = 2.0L * m - 1.0L;
      term *= (mu - odd * odd) / (8.0L * m * z);
      if (std::abs(term) >= prev)
        break; // divergence onset: stop at the smallest term
      prev = std::abs(term);
      const int phase = m % 4;
      if (phase == 0)
        p += term;
      else if (phase == 1)
        q += term;
      else if (phase == 2)
        p -= term;
      else
        q -= term;
      if (prev < 1e-21L)
        break;
    }
  };

  long double p0, q0, p1, q1;
  pq(0.0L, p0, q0);
  pq(4.0L, p1, q1);

  const long double amp = std::sqrt(2.0L / (kPiL * z));
  const long double chi0 = z - kPiL / 4.0L;
  const long double chi1 = z - 3.0L * kPiL / 4.0L;
  const long double c0 = std::cos(chi0), s0 = std::sin(chi0);
  const long double c1 = std::cos(chi1), s1 = std::sin(chi1);
  return {amp * (p0 * c0 - q0 * s0), amp * (p0 * s0 + q0 * c0),
          amp * (p1 * c1 - q1 * s1), amp * (p1 * s1 + q1 * c1)};
}

JyPair eval(double z) {
  if (!(z > 0.0) || !std::isfinite(z))
    throw std::domain_error("cylinder functions need finite z > 0");
  const long double zl = z;
  return zl <= kSeriesLimit ? series_small(zl) : asymptotic_large(zl);
}

} // namespace

double bessel_j0(double z) { return static_cast<double>(eval(z).j0); }
double bessel_j1(double z) { return static_cast<double>(eval(z).j1); }
double bessel_y0(double z) { return static_cast<double>(eval(z).y0); }
double bessel_y1(double z) { return static_cast<double>(eval(z).y1); }

Complex hankel1_0(double z) {
  const JyPair v = eval(z);
  return {static_cast<double>(v.j0), static_cast<double>(v.y0)};
}

Complex hankel1_1(double z) {
  const JyPair v = eval(z);
  return {static_cast<double>(v.j1), static_cast<double>(v.y1)};
}

BesselQuad bessel_all(double z) {
  const JyPair v = eval(z);
  return {static_cast<double>(v.j0), static_cast<double>(v.y0),
          static_cast<double>(v.j1), static_cast<double>(v.y1)};
}

Complex helmholtz_kernel(double k, const Vec2& x, const Vec2& y) {
  const double r = (x - y).norm();
  if (r == 0.0)
    throw std::domain_error("helmholtz_kernel: coincident points");
  return 0.25 * kImag * hankel1_0(k * r);
}

CVec2 helmholtz_kernel_grad_y(double k, const Vec2& x, const Vec2& y) {
  const double r = (x - y).norm();
  if (r == 0.0)
    throw std::domain_error("helmholtz_kernel_grad_y: coincident points");
  const Complex f = 0.25 * kImag * k * hankel1_1(k * r) / r;
  return (f * (x - y).cast<Complex>()).eval();
}

} // namespace rsi
