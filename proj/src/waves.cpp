#include "rsi/waves.hpp"

#include <cmath>
#include <stdexcept>

namespace rsi {

IncidentConfig::IncidentConfig(double k_, std::initializer_list<double> t)
    : k(k_), thetas(t) {
  validate();
}

IncidentConfig::IncidentConfig(double k_, std::vector<double> t)
    : k(k_), thetas(std::move(t)) {
  validate();
}

void IncidentConfig::validate() const {
  if (!(k > 0.0))
    throw std::invalid_argument("IncidentConfig: k must be > 0");
  if (thetas.empty() || thetas.size() > 2)
    throw std::invalid_argument("IncidentConfig: need one or two angles");
  for (double t : thetas)
    if (!(t > -kPi / 2.0 && t < kPi / 2.0))
      throw std::invalid_argument(
          "IncidentConfig: angles must lie in (-pi/2, pi/2)");
  if (thetas.size() == 2 && thetas[0] == thetas[1])
    throw std::invalid_argument(
        "IncidentConfig: two-angle config needs distinct angles");
}

Complex incident_field(const IncidentConfig& cfg, const Vec2& x) {
  Complex u = 0.0;
  for (double t : cfg.thetas)
    u += std::exp(kImag * cfg.k *
                  (std::sin(t) * x[0] - std::cos(t) * x[1]));
  return u;
}

Complex reflected_field(const IncidentConfig& cfg, const Vec2& x) {
  Complex u = 0.0;
  for (double t : cfg.thetas)
    u -= std::exp(kImag * cfg.k *
                  (std::sin(t) * x[0] + std::cos(t) * x[1]));
  return u;
}

Complex incident_plus_reflected(const IncidentConfig& cfg, const Vec2& x) {
  return incident_field(cfg, x) + reflected_field(cfg, x);
}

CVec2 grad_incident_plus_reflected(const IncidentConfig& cfg, const Vec2& x) {
  CVec2 g = CVec2::Zero();
  for (double t : cfg.thetas) {
    const double st = std::sin(t), ct = std::cos(t);
    const Complex ei =
        std::exp(kImag * cfg.k * (st * x[0] - ct * x[1]));
    const Complex er =
        std::exp(kImag * cfg.k * (st * x[0] + ct * x[1]));
    g[0] += kImag * cfg.k * st * (ei - er);
    g[1] += kImag * cfg.k * (-ct * ei - ct * er);
  }
  return g;
}

} // namespace rsi
