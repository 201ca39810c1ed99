// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "gmmv/common.hpp"

namespace gmmv {

namespace detail {

/// Large-argument Hankel asymptotics (Abramowitz & Stegun 9.2). At x >= 25 the
/// truncated P/Q series is accurate to ~1e-13 and an order of magnitude faster
/// than the library Bessel routines, which matters in operator assembly where
/// receiver distances are tens of wavelengths.
inline cplx hankel2_asymptotic(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0, q = 0.0;
  double term = 1.0;
  const double ix8 = 1.0 / (8.0 * x);
  for (int k = 1; k <= 10; ++k) {
    term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) * ix8 / k;
    if (k % 2 == 1) {
      q += (k % 4 == 1) ? term : -term;
    } else {
      p += (k % 4 == 2) ? -term : term;
    }
    if (std::abs(term) < 1e-17) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * constants::pi;
  const double amp = std::sqrt(2.0 / (constants::pi * x));
  // H2 = sqrt(2/(pi x)) (P - iQ) exp(-i chi)
  cplx pq(p, -q);
  return amp * pq * cplx(std::cos(chi), -std::sin(chi));
}

}  // namespace detail

inline double bessel_j(int nu, double x) { return std::cyl_bessel_j(nu, x); }
inline double bessel_y(int nu, double x) { return std::cyl_neumann(nu, x); }

/// Hankel function of the second kind, H2_nu(x) = J_nu(x) - i Y_nu(x), x > 0.
/// Under the exp(+i w t) time factor this is the outgoing cylindrical wave.
/// The fast asymptotic path is limited to low orders; the P/Q series needs
/// x >> nu^2 to converge.
inline cplx hankel2(int nu, double x) {
  if (nu <= 1 && x >= 25.0) return detail::hankel2_asymptotic(nu, x);
  return cplx(bessel_j(nu, x), -bessel_y(nu, x));
}

/// 2-D free-space Green's function of (-Lap - k^2): g(r) = -(i/4) H0^2(k r).
inline cplx greens2d(double k, double r) {
  return cplx(0.0, -0.25) * hankel2(0, k * r);
}

inline cplx bessel_j_derivative(int nu, double x) {
  if (nu == 0) return -bessel_j(1, x);
  return 0.5 * (bessel_j(nu - 1, x) - bessel_j(nu + 1, x));
}

inline cplx hankel2_derivative(int nu, double x) {
  if (nu == 0) return -hankel2(1, x);
  return 0.5 * (hankel2(nu - 1, x) - hankel2(nu + 1, x));
}

}  // namespace gmmv
