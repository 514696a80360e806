#pragma once

#include "rsi/types.hpp"

namespace rsi {

// Quadrature weights R_m for the periodic log-kernel rule on 2n equidistant
// points with spacing pi/n:
//   int_0^{2pi} ln(4 sin^2((t - tau)/2)) f(tau) dtau
//     ~= sum_j R_{|i-j|} f(tau_j),  t = tau_i.
// R_m = -(2pi/n) sum_{q=1}^{n-1} cos(q m pi/n)/q - (-1)^m pi/n^2.
// Exact for trigonometric polynomials of degree < n; the node lattice may be
// shifted (weights depend only on index differences).
RealVector log_rule_weights(int n);

// Log-rule weights for an arbitrary anchor t (not necessarily a node):
// R_j(t) = -(2pi/n) sum_q cos(q (t - tau_j))/q - (pi/n^2) cos(n (t - tau_j)).
RealVector log_rule_weights_at(int n, double t, const RealVector& nodes);

// Spectral differentiation matrix for an even number N of equidistant nodes
// on a 2pi-periodic grid: D_ij = (1/2)(-1)^{i-j} cot((s_i - s_j)/2), D_ii = 0.
// Exact for trigonometric polynomials of degree < N/2.
RealMatrix periodic_diff_matrix(int N);

} // namespace rsi
