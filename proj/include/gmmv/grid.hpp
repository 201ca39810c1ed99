// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "gmmv/common.hpp"

namespace gmmv {

/// Uniform 2-D grid of square cells. Cells are flattened row-major,
/// n = iy*nx + ix, and sampled at cell centers.
struct Grid2D {
  double x0 = 0.0;  // lower-left corner [m]
  double y0 = 0.0;
  double delta = 0.0;  // cell size [m]
  int nx = 0;
  int ny = 0;

  Grid2D() = default;
  Grid2D(double x0_, double y0_, double delta_, int nx_, int ny_)
      : x0(x0_), y0(y0_), delta(delta_), nx(nx_), ny(ny_) {
    if (delta <= 0.0) throw Error(ErrorCode::BadUnits, "grid spacing must be positive");
    if (nx < 1 || ny < 1) throw Error(ErrorCode::BadUnits, "grid must have at least one cell");
  }

  int size() const { return nx * ny; }
  int flatten(int ix, int iy) const { return iy * nx + ix; }
  std::pair<int, int> unflatten(int n) const { return {n % nx, n / nx}; }

  Vec2 center(int n) const {
    auto [ix, iy] = unflatten(n);
    return {x0 + (ix + 0.5) * delta, y0 + (iy + 0.5) * delta};
  }
  Vec2 center(int ix, int iy) const {
    return {x0 + (ix + 0.5) * delta, y0 + (iy + 0.5) * delta};
  }

  double x_max() const { return x0 + nx * delta; }
  double y_max() const { return y0 + ny * delta; }

  bool contains(const Vec2& p) const {
    return p.x >= x0 && p.x <= x_max() && p.y >= y0 && p.y <= y_max();
  }

  bool same_layout(const Grid2D& o) const {
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); };
    return nx == o.nx && ny == o.ny && close(delta, o.delta) && close(x0, o.x0) && close(y0, o.y0);
  }
};

/// Strictly increasing positive frequencies plus the level of background
/// permittivity needed for wavelengths/wavenumbers in the embedding medium.
struct FrequencySet {
  std::vector<double> f;   // [Hz]
  double eps_bg_rel = 1.0; // relative background permittivity for k_i

  FrequencySet() = default;
  explicit FrequencySet(std::vector<double> freqs, double eps_bg = 1.0)
      : f(std::move(freqs)), eps_bg_rel(eps_bg) {
    if (f.empty()) throw Error(ErrorCode::MissingField, "frequency list is empty");
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!(f[i] > 0.0)) throw Error(ErrorCode::BadUnits, "frequencies must be positive");
      if (i > 0 && !(f[i] > f[i - 1]))
        throw Error(ErrorCode::BadUnits, "frequencies must be strictly increasing");
    }
  }

  int count() const { return static_cast<int>(f.size()); }
  double omega(int i) const { return 2.0 * constants::pi * f[i]; }
  double lambda(int i) const { return constants::c0 / f[i] / std::sqrt(eps_bg_rel); }
  double k(int i) const {
    return omega(i) * std::sqrt(constants::eps0 * eps_bg_rel * constants::mu0);
  }
  double lambda_min() const { return lambda(count() - 1); }
  double lambda_max() const { return lambda(0); }
};

/// Homogeneous embedding medium. Time factor exp(+i w t) throughout, so lossy
/// media carry complex permittivity eps0*eps_r - i*sigma/w.
struct BackgroundModel {
  double eps_r = 1.0;   // relative permittivity
  double sigma = 0.0;   // conductivity [S/m]

  BackgroundModel() = default;
  BackgroundModel(double eps_r_, double sigma_) : eps_r(eps_r_), sigma(sigma_) {
    if (eps_r < 1.0) throw Error(ErrorCode::BadUnits, "background eps_r must be >= 1");
    if (sigma < 0.0) throw Error(ErrorCode::BadUnits, "background sigma must be >= 0");
  }

  cplx eps_abs(double omega) const {
    return cplx(constants::eps0 * eps_r, -sigma / omega);
  }
  double k(double omega) const {
    return omega * std::sqrt(constants::eps0 * eps_r * constants::mu0);
  }
};

/// Per-cell material map over a grid; contrast is relative to a background.
struct ContrastMap {
  Grid2D grid;
  RVec eps_r;  // relative permittivity per cell (>= 1)
  RVec sigma;  // conductivity per cell [S/m]

  ContrastMap() = default;
  explicit ContrastMap(const Grid2D& g)
      : grid(g), eps_r(RVec::Constant(g.size(), 1.0)), sigma(RVec::Zero(g.size())) {}

  /// chi_i(n) = eps_i(n) - eps_i^bg at angular frequency omega.
  CVec chi(double omega, const BackgroundModel& bg) const {
    CVec out(grid.size());
    cplx ebg = bg.eps_abs(omega);
    for (int n = 0; n < grid.size(); ++n) {
      out[n] = cplx(constants::eps0 * eps_r[n], -sigma[n] / omega) - ebg;
    }
    return out;
  }

  CVec eps_abs(double omega) const {
    CVec out(grid.size());
    for (int n = 0; n < grid.size(); ++n)
      out[n] = cplx(constants::eps0 * eps_r[n], -sigma[n] / omega);
    return out;
  }

  /// Support of the contrast relative to bg (frequency independent).
  std::vector<bool> support(const BackgroundModel& bg) const {
    std::vector<bool> s(grid.size());
    for (int n = 0; n < grid.size(); ++n)
      s[n] = std::abs(eps_r[n] - bg.eps_r) > 1e-12 || std::abs(sigma[n] - bg.sigma) > 1e-12;
    return s;
  }
};

struct GridRuleReport {
  bool pass = false;
  double delta_max = 0.0;  // min_i lambda_i / 15
};

/// Mesh-density rule: delta <= min_i(lambda_i)/15, with a small slack because
/// the reference measurement setups sit exactly on the boundary.
inline GridRuleReport check_grid_rule(const Grid2D& grid, const FrequencySet& freqs,
                                      double eps_slack = 1e-3) {
  GridRuleReport r;
  r.delta_max = freqs.lambda_min() / 15.0;
  r.pass = grid.delta <= r.delta_max * (1.0 + eps_slack);
  return r;
}

}  // namespace gmmv
