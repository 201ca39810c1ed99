// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "gmmv/common.hpp"
#include "gmmv/grid.hpp"
#include "gmmv/special.hpp"

namespace gmmv {

struct MieCylinder {
  Vec2 center;
  double radius = 0.0;
  double eps_r = 1.0;  // lossless dielectric
};

/// Closed-form TM scattered field of a homogeneous circular dielectric
/// cylinder illuminated by a unit line source, e_inc = -(i/4) H0^2(k|x - xs|).
/// Independent of the FDFD path; serves as its validation reference.
///
/// Modal coefficients follow from continuity of E_z and dE_z/drho at the rim:
///   a_m = [kd J'_m(kd a) J_m(k a) - k J'_m(k a) J_m(kd a)]
///       / [k H2'_m(k a) J_m(kd a) - kd J'_m(kd a) H2_m(k a)]
/// and e_sct(x) = -(i/4) sum_m a_m H2_m(k rho) H2_m(k rho_t) exp(i m (phi - phi_t)).
inline std::vector<cplx> mie_reference(const MieCylinder& cyl, const BackgroundModel& bg,
                                       double freq, const Vec2& source,
                                       const std::vector<Vec2>& points) {
  if (cyl.eps_r < 1.0) throw Error(ErrorCode::BadUnits, "cylinder eps_r must be >= 1");
  if (bg.sigma != 0.0)
    throw Error(ErrorCode::BadUnits, "series is implemented for lossless backgrounds");
  const double omega = 2.0 * constants::pi * freq;
  const double k = bg.k(omega);
  const double kd = omega * std::sqrt(constants::eps0 * cyl.eps_r * constants::mu0);
  const double a = cyl.radius;
  const int order_max = static_cast<int>(std::ceil(k * a)) + 15;

  const double rho_t = distance(source, cyl.center);
  if (rho_t <= a) throw Error(ErrorCode::GeometryViolation, "source inside the cylinder");
  const double phi_t = std::atan2(source.y - cyl.center.y, source.x - cyl.center.x);

  std::vector<cplx> am(order_max + 1);
  for (int m = 0; m <= order_max; ++m) {
    cplx num = kd * bessel_j_derivative(m, kd * a) * bessel_j(m, k * a) -
               k * bessel_j_derivative(m, k * a) * bessel_j(m, kd * a);
    cplx den = k * hankel2_derivative(m, k * a) * bessel_j(m, kd * a) -
               kd * bessel_j_derivative(m, kd * a) * hankel2(m, k * a);
    am[m] = num / den;
  }

  std::vector<cplx> out(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    const double rho = distance(points[j], cyl.center);
    if (rho <= a) throw Error(ErrorCode::GeometryViolation, "observation point inside the cylinder");
    const double phi = std::atan2(points[j].y - cyl.center.y, points[j].x - cyl.center.x);
    cplx sum = am[0] * hankel2(0, k * rho) * hankel2(0, k * rho_t);
    double last_envelope = std::abs(sum);
    for (int m = 1; m <= order_max; ++m) {
      cplx mode = am[m] * hankel2(m, k * rho) * hankel2(m, k * rho_t) * 2.0;
      sum += mode * std::cos(m * (phi - phi_t));
      last_envelope = std::abs(mode);
    }
    if (last_envelope > 1e-12 * std::abs(sum))
      throw Error(ErrorCode::NoConvergence, "modal series did not converge");
    out[j] = cplx(0.0, -0.25) * sum;
  }
  return out;
}

}  // namespace gmmv
