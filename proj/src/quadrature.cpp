#include "rsi/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace rsi {

RealVector log_rule_weights(int n) {
  if (n < 2)
    throw std::invalid_argument("log_rule_weights: n must be >= 2");
  RealVector r(2 * n);
  for (int m = 0; m < 2 * n; ++m) {
    double sum = 0.0;
    for (int q = n - 1; q >= 1; --q)
      sum += std::cos(q * m * kPi / n) / q;
    r[m] = -(2.0 * kPi / n) * sum - ((m % 2 == 0) ? 1.0 : -1.0) * kPi / (n * n);
  }
  return r;
}

RealVector log_rule_weights_at(int n, double t, const RealVector& nodes) {
  RealVector r(nodes.size());
  for (Eigen::Index j = 0; j < nodes.size(); ++j) {
    const double d = t - nodes[j];
    double sum = 0.0;
    for (int q = n - 1; q >= 1; --q)
      sum += std::cos(q * d) / q;
    r[j] = -(2.0 * kPi / n) * sum - (kPi / (n * n)) * std::cos(n * d);
  }
  return r;
}

RealMatrix periodic_diff_matrix(int N) {
  if (N < 2 || N % 2 != 0)
    throw std::invalid_argument("periodic_diff_matrix: N must be even, >= 2");
  RealMatrix d = RealMatrix::Zero(N, N);
  const double h = 2.0 * kPi / N;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j)
        continue;
      const double sgn = ((i - j) % 2 == 0) ? 1.0 : -1.0;
      d(i, j) = 0.5 * sgn / std::tan(0.5 * h * (i - j));
    }
  return d;
}

} // namespace rsi
