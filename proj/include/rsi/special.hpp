#pragma once

#include "rsi/types.hpp"

namespace rsi {

// Cylinder functions of orders 0 and 1 for real z > 0.
// Relative accuracy ~1e-12 over (0, 500]; arguments beyond that range are
// accepted and only get more accurate (pure asymptotic regime).
double bessel_j0(double z);
double bessel_j1(double z);
double bessel_y0(double z);
double bessel_y1(double z);

// First-kind Hankel functions H_0^(1), H_1^(1). Throws std::domain_error for
// z <= 0 or non-finite z.
Complex hankel1_0(double z);
Complex hankel1_1(double z);

// All four values in one evaluation (kernel assembly needs every one).
struct BesselQuad {
  double j0, y0, j1, y1;
};
BesselQuad bessel_all(double z);

// Outgoing 2-D Helmholtz kernel (i/4) H_0^(1)(k |x-y|) and its y-gradient
// (i k/4) H_1^(1)(k r) (x-y)/r.  Throws std::domain_error when x == y.
Complex helmholtz_kernel(double k, const Vec2& x, const Vec2& y);
CVec2 helmholtz_kernel_grad_y(double k, const Vec2& x, const Vec2& y);

} // namespace rsi
