#pragma once

#include <complex>

#include <Eigen/Dense>

namespace rsi {

using Complex = std::complex<double>;

using Vec2 = Eigen::Vector2d;
using CVec2 = Eigen::Vector2cd;

using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kImag{0.0, 1.0};

} // namespace rsi
