// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "gmmv/common.hpp"
#include "gmmv/grid.hpp"

namespace gmmv {

using SparseC = Eigen::SparseMatrix<cplx>;

/// 2-D TM Helmholtz system on an extended grid whose outer npml cells on each
/// side form a stretched-coordinate PML.
///
/// The physical operator is A = (-Lap_s - k^2)/mu0, so that A e = w^2 j with
/// the contrast-source density j on the right-hand side. What is stored is the
/// diagonally rescaled Atilde = S A with S = diag(s_x s_y), which makes the
/// matrix complex-symmetric (Atilde^T = Atilde); S is the identity outside the
/// PML. solve() hides the rescaling, so callers always see A x = b.
class FdfdSystem {
 public:
  Grid2D grid;          // extended grid, PML cells included
  int npml = 0;
  double omega = 0.0;
  int freq_index = 0;
  SparseC matrix;       // Atilde, <=5 nonzeros per row, complex-symmetric
  CVec row_scale;       // S diagonal

  bool in_pml(int ix, int iy) const {
    return ix < npml || iy < npml || ix >= grid.nx - npml || iy >= grid.ny - npml;
  }

  /// Maps each cell of `sub` onto the extended-grid cells covering it.
  /// Requires sub.delta to be an integer multiple m of grid.delta with aligned
  /// cell boundaries; every sub cell then maps to an m-by-m block.
  std::vector<std::vector<int>> index_map(const Grid2D& sub) const {
    double ratio = sub.delta / grid.delta;
    int m = static_cast<int>(std::lround(ratio));
    if (m < 1 || std::abs(ratio - m) > 1e-9)
      throw Error(ErrorCode::GridMismatch, "sub-grid spacing is not an integer refinement");
    double offx = (sub.x0 - grid.x0) / grid.delta;
    double offy = (sub.y0 - grid.y0) / grid.delta;
    int ox = static_cast<int>(std::lround(offx));
    int oy = static_cast<int>(std::lround(offy));
    if (std::abs(offx - ox) > 1e-6 || std::abs(offy - oy) > 1e-6)
      throw Error(ErrorCode::GridMismatch, "sub-grid cells are not aligned with the extended grid");
    if (ox < 0 || oy < 0 || ox + sub.nx * m > grid.nx || oy + sub.ny * m > grid.ny)
      throw Error(ErrorCode::GridMismatch, "sub-grid extends outside the extended grid");
    std::vector<std::vector<int>> map(sub.size());
    for (int n = 0; n < sub.size(); ++n) {
      auto [jx, jy] = sub.unflatten(n);
      auto& cells = map[n];
      cells.reserve(m * m);
      for (int dy = 0; dy < m; ++dy)
        for (int dx = 0; dx < m; ++dx)
          cells.push_back(grid.flatten(ox + jx * m + dx, oy + jy * m + dy));
    }
    return map;
  }
};

namespace detail {

/// Complex coordinate-stretch factors along one axis: cell centers and faces.
/// Cubic grading, sized for a theoretical normal-incidence reflection R0.
inline void pml_stretch(int nc, int npml, double delta, double k, double r0,
                        std::vector<cplx>& centers, std::vector<cplx>& faces) {
  centers.assign(nc, cplx(1.0, 0.0));
  faces.assign(nc + 1, cplx(1.0, 0.0));
  if (npml <= 0) return;
  const double L = npml * delta;
  const double smax = 2.0 * std::log(1.0 / r0) / (k * L);
  auto sigma_at = [&](double pos) {
    double d_lo = npml * delta - pos;
    double d_hi = pos - (nc - npml) * delta;
    double s = 0.0;
    if (d_lo > 0) s += smax * std::pow(d_lo / L, 3);
    if (d_hi > 0) s += smax * std::pow(d_hi / L, 3);
    return s;
  };
  for (int i = 0; i < nc; ++i) centers[i] = cplx(1.0, -sigma_at((i + 0.5) * delta));
  for (int i = 0; i <= nc; ++i) faces[i] = cplx(1.0, -sigma_at(i * delta));
}

}  // namespace detail

struct FdfdOptions {
  int npml = 10;
  double pml_reflection = 1e-4;
  double grid_rule_slack = 1e-3;
};

/// Assembles the TM FDFD system at one frequency. With a contrast map the
/// wavenumber uses the target permittivity inside target cells; without it the
/// medium is the homogeneous background. The contrast map must live on the
/// extended grid itself.
inline FdfdSystem assemble_fdfd(const Grid2D& grid_ext, const BackgroundModel& bg,
                                const FrequencySet& freqs, int freq_index,
                                const ContrastMap* contrast = nullptr,
                                const FdfdOptions& opt = {}) {
  auto rule = check_grid_rule(grid_ext, freqs, opt.grid_rule_slack);
  if (!rule.pass)
    throw Error(ErrorCode::GridTooCoarse, "extended grid violates the mesh-density rule");
  if (contrast && !contrast->grid.same_layout(grid_ext))
    throw Error(ErrorCode::GridMismatch, "contrast map is not on the extended grid");

  FdfdSystem sys;
  sys.grid = grid_ext;
  sys.npml = opt.npml;
  sys.freq_index = freq_index;
  const double omega = freqs.omega(freq_index);
  sys.omega = omega;
  const double kbg = bg.k(omega);
  const int nx = grid_ext.nx, ny = grid_ext.ny;
  const int N = grid_ext.size();

  std::vector<cplx> sxc, sxf, syc, syf;
  detail::pml_stretch(nx, opt.npml, grid_ext.delta, kbg, opt.pml_reflection, sxc, sxf);
  detail::pml_stretch(ny, opt.npml, grid_ext.delta, kbg, opt.pml_reflection, syc, syf);

  CVec eps;
  if (contrast) {
    eps = contrast->eps_abs(omega);
  } else {
    eps = CVec::Constant(N, bg.eps_abs(omega));
  }

  sys.row_scale.resize(N);
  const double inv_d2 = 1.0 / (grid_ext.delta * grid_ext.delta);
  const double inv_mu = 1.0 / constants::mu0;

  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(N) * 5);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int n = iy * nx + ix;
      const cplx S = sxc[ix] * syc[iy];
      sys.row_scale[n] = S;
      cplx diag = 0.0;
      // -x / +x faces; absent neighbors are Dirichlet zeros behind the PML
      {
        cplx w = syc[iy] / sxf[ix] * inv_d2;
        diag += w;
        if (ix > 0) trips.emplace_back(n, n - 1, -w * inv_mu);
      }
      {
        cplx w = syc[iy] / sxf[ix + 1] * inv_d2;
        diag += w;
        if (ix + 1 < nx) trips.emplace_back(n, n + 1, -w * inv_mu);
      }
      {
        cplx w = sxc[ix] / syf[iy] * inv_d2;
        diag += w;
        if (iy > 0) trips.emplace_back(n, n - nx, -w * inv_mu);
      }
      {
        cplx w = sxc[ix] / syf[iy + 1] * inv_d2;
        diag += w;
        if (iy + 1 < ny) trips.emplace_back(n, n + nx, -w * inv_mu);
      }
      trips.emplace_back(n, n, diag * inv_mu - S * omega * omega * eps[n]);
    }
  }
  sys.matrix.resize(N, N);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  sys.matrix.makeCompressed();
  return sys;
}

/// Sparse direct factorization of one FdfdSystem, shared across all sources of
/// a frequency. Immutable once built.
class FdfdFactorization {
 public:
  explicit FdfdFactorization(FdfdSystem sys) : sys_(std::make_shared<FdfdSystem>(std::move(sys))) {
    lu_.compute(sys_->matrix);
    if (lu_.info() != Eigen::Success)
      throw Error(ErrorCode::SingularMatrix, "sparse LU factorization failed");
  }

  const FdfdSystem& system() const { return *sys_; }

  /// Solves A x = b (the physical, unscaled system).
  CVec solve(const CVec& b) const {
    if (b.size() != sys_->matrix.rows())
      throw Error(ErrorCode::DimMismatch, "source vector length does not match the grid");
    CVec rhs = sys_->row_scale.cwiseProduct(b);
    CVec x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success)
      throw Error(ErrorCode::SingularMatrix, "sparse LU solve failed");
    return x;
  }

  /// Solves A^T x = b. Because Atilde is complex-symmetric this reuses the
  /// same factorization: A^T = Atilde S^-1 => x = S Atilde^-1 b.
  CVec solve_transpose(const CVec& b) const {
    if (b.size() != sys_->matrix.rows())
      throw Error(ErrorCode::DimMismatch, "source vector length does not match the grid");
    CVec x = lu_.solve(b);
    if (lu_.info() != Eigen::Success)
      throw Error(ErrorCode::SingularMatrix, "sparse LU solve failed");
    return sys_->row_scale.cwiseProduct(x);
  }

  /// Relative residual ||A x - b|| / ||b|| of a proposed solution.
  double residual(const CVec& x, const CVec& b) const {
    CVec ax = sys_->matrix * x;  // = S A x
    CVec axu = ax.cwiseQuotient(sys_->row_scale);
    return (axu - b).norm() / b.norm();
  }

 private:
  std::shared_ptr<FdfdSystem> sys_;
  Eigen::SparseLU<SparseC> lu_;
};

/// Solves A x = source for one excitation.
inline CVec solve_field(const FdfdFactorization& fact, const CVec& source) {
  return fact.solve(source);
}

/// Extended grid construction: core region plus `pad` of background plus npml
/// PML cells, aligned so that core cells coincide with extended cells.
inline Grid2D make_extended_grid(const Grid2D& core, double pad, int npml) {
  int pad_cells = static_cast<int>(std::ceil(pad / core.delta));
  int ext = pad_cells + npml;
  return Grid2D(core.x0 - ext * core.delta, core.y0 - ext * core.delta, core.delta,
                core.nx + 2 * ext, core.ny + 2 * ext);
}

}  // namespace gmmv
