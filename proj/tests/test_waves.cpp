#include "rsi/waves.hpp"

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "rsi/types.hpp"

using namespace rsi;

TEST_CASE("downward plane wave and its mirror image") {
  const double k = 2.3, theta = 0.4;
  const IncidentConfig cfg(k, {theta});
  const Vec2 x(0.7, 1.9);
  const Vec2 d(std::sin(theta), -std::cos(theta));
  const Vec2 dr(std::sin(theta), std::cos(theta));
  CHECK(std::abs(incident_field(cfg, x) -
                 std::exp(kImag * k * d.dot(x))) <= 1e-15);
  CHECK(std::abs(reflected_field(cfg, x) +
                 std::exp(kImag * k * dr.dot(x))) <= 1e-15);
  CHECK(std::abs(incident_plus_reflected(cfg, x) - incident_field(cfg, x) -
                 reflected_field(cfg, x)) <= 1e-15);
}

TEST_CASE("total incoming field vanishes on the unperturbed plane") {
  for (double theta : {-1.2, -0.5236, 0.0, 0.9}) {
    const IncidentConfig cfg(1.7, {theta});
    for (double x1 : {-5.0, -0.3, 0.0, 2.2, 40.0}) {
      CAPTURE(theta);
      CAPTURE(x1);
      CHECK(std::abs(incident_plus_reflected(cfg, Vec2(x1, 0.0))) <= 1e-14);
    }
  }
  const IncidentConfig two(3.0, {-kPi / 6.0, kPi / 6.0});
  CHECK(std::abs(incident_plus_reflected(two, Vec2(0.8, 0.0))) <= 1e-14);
}

TEST_CASE("two-angle field is the superposition of the single-angle ones") {
  const IncidentConfig two(2.0, {-0.7, 0.3});
  const IncidentConfig a(2.0, {-0.7}), b(2.0, {0.3});
  const Vec2 x(-0.4, 0.9);
  CHECK(std::abs(incident_field(two, x) - incident_field(a, x) -
                 incident_field(b, x)) <= 1e-15);
  CHECK(std::abs(reflected_field(two, x) - reflected_field(a, x) -
                 reflected_field(b, x)) <= 1e-15);
}

TEST_CASE("gradient of the incoming field: pinned value and differences") {
  // Normal incidence, k = 1, origin: d/dx2 (u^i + u^r) = -2i.
  const IncidentConfig normal(1.0, {0.0});
  const CVec2 g0 = grad_incident_plus_reflected(normal, Vec2(0.0, 0.0));
  CHECK(std::abs(g0[0]) <= 1e-15);
  CHECK(std::abs(g0[1] - Complex(0.0, -2.0)) <= 1e-15);

  const IncidentConfig cfg(2.6, {-0.5236, 0.31});
  const Vec2 x(0.25, 1.4);
  const CVec2 g = grad_incident_plus_reflected(cfg, x);
  const double h = 1e-6;
  for (int c = 0; c < 2; ++c) {
    Vec2 xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const Complex fd = (incident_plus_reflected(cfg, xp) -
                        incident_plus_reflected(cfg, xm)) /
                       (2.0 * h);
    CHECK(std::abs(fd - g[c]) <= 1e-8);
  }
}

TEST_CASE("incoming field satisfies the Helmholtz equation") {
  const double k = 1.9;
  const IncidentConfig cfg(k, {0.62});
  const Vec2 x(0.3, 0.8);
  const double h = 1e-4;
  const Complex c = incident_plus_reflected(cfg, x);
  Complex lap = -4.0 * c;
  lap += incident_plus_reflected(cfg, Vec2(x[0] + h, x[1]));
  lap += incident_plus_reflected(cfg, Vec2(x[0] - h, x[1]));
  lap += incident_plus_reflected(cfg, Vec2(x[0], x[1] + h));
  lap += incident_plus_reflected(cfg, Vec2(x[0], x[1] - h));
  lap /= h * h;
  CHECK(std::abs(lap + k * k * c) <= 1e-6);
}

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(IncidentConfig(0.0, {0.1}), std::invalid_argument);
  CHECK_THROWS_AS(IncidentConfig(-1.0, {0.1}), std::invalid_argument);
  CHECK_THROWS_AS(IncidentConfig(1.0, std::vector<double>{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(IncidentConfig(1.0, {0.1, 0.2, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(IncidentConfig(1.0, {kPi / 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(IncidentConfig(1.0, {-2.0}), std::invalid_argument);
  CHECK_THROWS_AS(IncidentConfig(1.0, {0.3, 0.3}), std::invalid_argument);
  CHECK_NOTHROW(IncidentConfig(5.0, {-kPi / 6.0, kPi / 6.0}));
}
