#pragma once

#include <vector>

#include "rsi/types.hpp"

namespace rsi {

// One excitation: wavenumber plus one or two incident plane-wave angles.
// theta is measured from the downward vertical: direction d = (sin t, -cos t),
// its specular reflection d' = (sin t, cos t).  Angles must lie in
// (-pi/2, pi/2); a two-angle config must have distinct angles.
struct IncidentConfig {
  double k = 1.0;
  std::vector<double> thetas;

  IncidentConfig() = default;
  IncidentConfig(double k_, std::initializer_list<double> t);
  IncidentConfig(double k_, std::vector<double> t);

  void validate() const; // throws std::invalid_argument
};

// u^i(x)  = sum_l exp(i k d_l . x)
// u^r(x)  = -sum_l exp(i k d'_l . x)
// The pair cancels identically on the unperturbed plane {x2 = 0}.
Complex incident_field(const IncidentConfig& cfg, const Vec2& x);
Complex reflected_field(const IncidentConfig& cfg, const Vec2& x);
Complex incident_plus_reflected(const IncidentConfig& cfg, const Vec2& x);
CVec2 grad_incident_plus_reflected(const IncidentConfig& cfg, const Vec2& x);

} // namespace rsi
