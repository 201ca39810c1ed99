// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gmmv/common.hpp"
#include "gmmv/dataset.hpp"
#include "gmmv/fdfd.hpp"
#include "gmmv/grid.hpp"
#include "gmmv/measurement.hpp"
#include "gmmv/parallel.hpp"
#include "gmmv/special.hpp"

namespace gmmv {

enum class RowClass { Recon, Cv, All };

/// Per-column data container matching ScatterDataset::data layout: one
/// catalog_size x P complex block per frequency, holes zero.
using DataBlocks = std::vector<CMat>;

/// The family {Phi_{p,i}} of Eq.-style sensing matrices together with its
/// stacked forward (Phi * J) and adjoint (Phi^H * R) actions.
///
/// In a homogeneous background the rows of Phi_{p,i} depend only on the
/// receiver slot and the frequency, so one dense catalog_size x N matrix per
/// frequency backs all P logical blocks; per-source rows are selected through
/// the active masks. Columns of J are ordered source-fastest, frequency-slowest.
class SensingOperator {
 public:
  Grid2D grid;              // inversion grid (N columns)
  FrequencySet freqs;
  MeasurementConfig config;
  std::vector<CMat> catalog;  // per frequency: catalog_size x N

  int num_cells() const { return grid.size(); }
  int num_freqs() const { return static_cast<int>(catalog.size()); }
  int num_sources() const { return config.num_sources(); }
  int num_columns() const { return num_freqs() * num_sources(); }

  /// {0,1} weights of the selected row class per (slot, source).
  const RMat& mask(RowClass cls) const {
    switch (cls) {
      case RowClass::Recon: return mask_recon_;
      case RowClass::Cv: return mask_cv_;
      default: return mask_all_;
    }
  }

  void finalize() {
    config.check_consistent();
    const int Q = config.catalog_size();
    const int P = config.num_sources();
    mask_recon_ = RMat::Zero(Q, P);
    mask_cv_ = RMat::Zero(Q, P);
    for (int p = 0; p < P; ++p)
      for (std::size_t j = 0; j < config.active[p].size(); ++j) {
        if (config.roles[p][j] == RxRole::Cv)
          mask_cv_(config.active[p][j], p) = 1.0;
        else
          mask_recon_(config.active[p][j], p) = 1.0;
      }
    mask_all_ = mask_recon_ + mask_cv_;
  }

  /// Materializes the dense block Phi_{p,i} restricted to one row class
  /// (rows ordered by the active list). Intended for tests and diagnostics.
  CMat block(int p, int i, RowClass cls = RowClass::All) const {
    std::vector<int> rows;
    for (std::size_t j = 0; j < config.active[p].size(); ++j) {
      bool is_cv = config.roles[p][j] == RxRole::Cv;
      if (cls == RowClass::All || (cls == RowClass::Cv) == is_cv) rows.push_back(config.active[p][j]);
    }
    CMat out(rows.size(), num_cells());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = catalog[i].row(rows[r]);
    return out;
  }

  void check_dataset(const ScatterDataset& ds) const {
    if (ds.num_freqs() != num_freqs() || ds.num_sources() != num_sources() ||
        ds.config.catalog_size() != config.catalog_size())
      throw Error(ErrorCode::DimMismatch, "operator and dataset shapes disagree");
  }

 private:
  RMat mask_recon_, mask_cv_, mask_all_;
};

/// Column (p,i) of the result is Phi_{p,i} j_{p,i} on the selected row class.
inline DataBlocks apply_forward(const SensingOperator& op, const CMat& J, RowClass cls) {
  if (J.rows() != op.num_cells() || J.cols() != op.num_columns())
    throw Error(ErrorCode::DimMismatch, "contrast-source matrix has wrong shape");
  const int P = op.num_sources();
  DataBlocks out(op.num_freqs());
  parallel_for(op.num_freqs(), [&](std::int64_t i) {
    CMat full = op.catalog[i] * J.middleCols(static_cast<int>(i) * P, P);
    out[i] = full.cwiseProduct(op.mask(cls).cast<cplx>());
  });
  return out;
}

/// Column (p,i) of the result is Phi_{p,i}^H r_{p,i} over the selected rows.
inline CMat apply_adjoint(const SensingOperator& op, const DataBlocks& R, RowClass cls) {
  if (static_cast<int>(R.size()) != op.num_freqs())
    throw Error(ErrorCode::DimMismatch, "residual blocks do not match frequency count");
  const int P = op.num_sources();
  for (const auto& b : R)
    if (b.rows() != op.config.catalog_size() || b.cols() != P)
      throw Error(ErrorCode::DimMismatch, "residual block has wrong shape");
  CMat out(op.num_cells(), op.num_columns());
  parallel_for(op.num_freqs(), [&](std::int64_t i) {
    CMat masked = R[i].cwiseProduct(op.mask(cls).cast<cplx>());
    out.middleCols(static_cast<int>(i) * P, P) = op.catalog[i].adjoint() * masked;
  });
  return out;
}

/// Analytic Green's-function build for homogeneous backgrounds:
/// Phi[q, n] = w mu0 g(x_q, x_n) delta^2, g = -(i/4) H0^2(k r).
inline SensingOperator build_sensing_greens(const Grid2D& grid, const MeasurementConfig& config,
                                            const FrequencySet& freqs,
                                            const BackgroundModel& bg) {
  config.check_consistent();
  for (const auto& r : config.receivers)
    if (grid.contains(r))
      throw Error(ErrorCode::ReceiverInsideGrid, "receiver inside the inversion grid");
  SensingOperator op;
  op.grid = grid;
  op.freqs = freqs;
  op.config = config;
  op.catalog.assign(freqs.count(), CMat());
  const int N = grid.size();
  const int Q = config.catalog_size();
  std::vector<Vec2> centers(N);
  for (int n = 0; n < N; ++n) centers[n] = grid.center(n);
  for (int i = 0; i < freqs.count(); ++i) {
    const double omega = freqs.omega(i);
    const double k = bg.k(omega);
    const double scale = omega * constants::mu0 * grid.delta * grid.delta;
    CMat& m = op.catalog[i];
    m.resize(Q, N);
    parallel_for(Q, [&](std::int64_t q) {
      const Vec2& rx = config.receivers[q];
      for (int n = 0; n < N; ++n)
        m(static_cast<int>(q), n) = scale * greens2d(k, distance(rx, centers[n]));
    });
  }
  op.finalize();
  return op;
}

namespace detail {

/// Kirchhoff sampling functional: weights w such that e(x_q) = w^T e for any
/// field radiating from sources enclosed by the contour. The contour is the
/// square of cell faces `off` cells outside the inversion box; e and de/dn are
/// taken from the two straddling cell layers, the Green's factors are analytic.
inline CVec kirchhoff_weights(const FdfdSystem& sys, const Grid2D& inv, int off, const Vec2& rx,
                              double k) {
  const Grid2D& g = sys.grid;
  int lox = static_cast<int>(std::lround((inv.x0 - g.x0) / g.delta)) - off;
  int loy = static_cast<int>(std::lround((inv.y0 - g.y0) / g.delta)) - off;
  int hix = static_cast<int>(std::lround((inv.x_max() - g.x0) / g.delta)) + off - 1;
  int hiy = static_cast<int>(std::lround((inv.y_max() - g.y0) / g.delta)) + off - 1;
  if (lox < 1 || loy < 1 || hix + 1 >= g.nx - 1 || hiy + 1 >= g.ny - 1)
    throw Error(ErrorCode::GridMismatch, "contour does not fit inside the extended grid");
  CVec w = CVec::Zero(g.size());
  const double ds = g.delta;
  auto add_edge = [&](double xm, double ym, double nxh, double nyh, int n_in, int n_out) {
    double r = std::hypot(rx.x - xm, rx.y - ym);
    cplx gg = greens2d(k, r);
    cplx dgdr = cplx(0.0, 0.25) * k * hankel2(1, k * r);
    cplx ddn = dgdr * ((xm - rx.x) * nxh + (ym - rx.y) * nyh) / r;
    // e(x_q) = sum ds [ e_mid dG/dn - G de/dn ], outward normal n
    w[n_out] += ds * ddn / 2.0 - gg;
    w[n_in] += ds * ddn / 2.0 + gg;
  };
  for (int t = loy; t <= hiy; ++t) {
    double ym = g.y0 + (t + 0.5) * ds;
    add_edge(g.x0 + (hix + 1) * ds, ym, 1.0, 0.0, g.flatten(hix, t), g.flatten(hix + 1, t));
    add_edge(g.x0 + lox * ds, ym, -1.0, 0.0, g.flatten(lox, t), g.flatten(lox - 1, t));
  }
  for (int t = lox; t <= hix; ++t) {
    double xm = g.x0 + (t + 0.5) * ds;
    add_edge(xm, g.y0 + (hiy + 1) * ds, 0.0, 1.0, g.flatten(t, hiy), g.flatten(t, hiy + 1));
    add_edge(xm, g.y0 + loy * ds, 0.0, -1.0, g.flatten(t, loy), g.flatten(t, loy - 1));
  }
  return w;
}

}  // namespace detail

/// Spacing refinement for the sensing factorization grids: fine enough that
/// numerical dispersion across the inversion box stays well inside the 5%
/// agreement budget against the analytic build.
inline int sensing_refinement(double delta_inv, double lambda) {
  return std::max(1, static_cast<int>(std::ceil(40.0 * delta_inv / lambda)));
}

/// Builds background factorizations suitable for build_sensing_fdfd: one per
/// frequency, on an integer refinement of the inversion grid with a small
/// margin before the PML.
inline std::vector<FdfdFactorization> make_sensing_factorizations(
    const Grid2D& inv, const FrequencySet& freqs, const BackgroundModel& bg,
    const FdfdOptions& opt = {}) {
  std::vector<FdfdFactorization> facts;
  facts.reserve(freqs.count());
  for (int i = 0; i < freqs.count(); ++i) {
    int m = sensing_refinement(inv.delta, freqs.lambda(i));
    double ds = inv.delta / m;
    int gap = 8;
    int extra = 4 + gap + opt.npml;  // contour offset + gap + PML, in fine cells
    Grid2D ext(inv.x0 - extra * ds, inv.y0 - extra * ds, ds, inv.nx * m + 2 * extra,
               inv.ny * m + 2 * extra);
    facts.emplace_back(assemble_fdfd(ext, bg, freqs, i, nullptr, opt));
  }
  return facts;
}

/// FDFD route for the sensing matrices: row q of Phi_{.,i} comes from one
/// transpose-system solve with the Kirchhoff sampling functional of receiver q
/// (reciprocity through the complex-symmetric system), restricted to the
/// inversion-grid columns and scaled by w_i. Q solves per frequency.
inline SensingOperator build_sensing_fdfd(const std::vector<FdfdFactorization>& facts,
                                          const Grid2D& grid, const MeasurementConfig& config,
                                          const FrequencySet& freqs, const BackgroundModel& bg) {
  config.check_consistent();
  if (static_cast<int>(facts.size()) != freqs.count())
    throw Error(ErrorCode::DimMismatch, "need one factorization per frequency");
  for (const auto& r : config.receivers)
    if (grid.contains(r))
      throw Error(ErrorCode::ReceiverInsideGrid, "receiver inside the inversion grid");
  SensingOperator op;
  op.grid = grid;
  op.freqs = freqs;
  op.config = config;
  op.catalog.assign(freqs.count(), CMat());
  const int N = grid.size();
  const int Q = config.catalog_size();
  for (int i = 0; i < freqs.count(); ++i) {
    const FdfdSystem& sys = facts[i].system();
    const double omega = freqs.omega(i);
    const double k = bg.k(omega);
    auto map = sys.index_map(grid);
    CMat& m = op.catalog[i];
    m.resize(Q, N);
    parallel_for(Q, [&](std::int64_t q) {
      CVec w = detail::kirchhoff_weights(sys, grid, 2, config.receivers[q], k);
      CVec row = facts[i].solve_transpose(w);
      for (int n = 0; n < N; ++n) {
        cplx acc = 0.0;
        for (int c : map[n]) acc += row[c];
        m(static_cast<int>(q), n) = omega * acc;
      }
    });
  }
  op.finalize();
  return op;
}

// ---------------------------------------------------------------------------
// Optional binary cache: versioned header + row-major complex64 blocks.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

/// Key identifying the (grid, measurement, frequency) combination an operator
/// was built for.
inline std::uint64_t sensing_cache_key(const Grid2D& grid, const MeasurementConfig& config,
                                       const FrequencySet& freqs) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* d, std::size_t n) { h = detail::fnv1a(d, n, h); };
  mix(&grid.x0, sizeof grid.x0);
  mix(&grid.y0, sizeof grid.y0);
  mix(&grid.delta, sizeof grid.delta);
  mix(&grid.nx, sizeof grid.nx);
  mix(&grid.ny, sizeof grid.ny);
  for (double f : freqs.f) mix(&f, sizeof f);
  for (const auto& s : config.sources) {
    mix(&s.x, sizeof s.x);
    mix(&s.y, sizeof s.y);
  }
  for (const auto& r : config.receivers) {
    mix(&r.x, sizeof r.x);
    mix(&r.y, sizeof r.y);
  }
  for (const auto& act : config.active)
    for (int q : act) mix(&q, sizeof q);
  for (const auto& role : config.roles)
    for (RxRole r : role) mix(&r, sizeof r);
  return h;
}

inline void save_sensing_cache(const SensingOperator& op, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open cache file for writing");
  f.write("GMMVOP/1", 8);
  std::uint64_t key = sensing_cache_key(op.grid, op.config, op.freqs);
  std::int32_t I = op.num_freqs(), Q = op.config.catalog_size(), N = op.num_cells();
  f.write(reinterpret_cast<const char*>(&key), 8);
  f.write(reinterpret_cast<const char*>(&I), 4);
  f.write(reinterpret_cast<const char*>(&Q), 4);
  f.write(reinterpret_cast<const char*>(&N), 4);
  std::uint64_t payload_hash = 1469598103934665603ULL;
  std::vector<float> buf;
  for (const auto& m : op.catalog) {
    buf.resize(static_cast<std::size_t>(Q) * N * 2);
    std::size_t t = 0;
    for (int q = 0; q < Q; ++q)
      for (int n = 0; n < N; ++n) {
        buf[t++] = static_cast<float>(m(q, n).real());
        buf[t++] = static_cast<float>(m(q, n).imag());
      }
    payload_hash = detail::fnv1a(buf.data(), buf.size() * sizeof(float), payload_hash);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  f.write(reinterpret_cast<const char*>(&payload_hash), 8);
  if (!f) throw Error(ErrorCode::IoError, "cache write failed");
}

/// Loads a cached operator; geometry/masks still come from the caller, which
/// must pass the same configuration the cache was keyed on.
inline SensingOperator load_sensing_cache(const std::string& path, const Grid2D& grid,
                                          const MeasurementConfig& config,
                                          const FrequencySet& freqs) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open cache file");
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != "GMMVOP/1")
    throw Error(ErrorCode::VersionMismatch, "bad cache magic");
  std::uint64_t key;
  std::int32_t I, Q, N;
  f.read(reinterpret_cast<char*>(&key), 8);
  f.read(reinterpret_cast<char*>(&I), 4);
  f.read(reinterpret_cast<char*>(&Q), 4);
  f.read(reinterpret_cast<char*>(&N), 4);
  if (!f) throw Error(ErrorCode::CorruptRecord, "truncated cache header");
  if (key != sensing_cache_key(grid, config, freqs))
    throw Error(ErrorCode::VersionMismatch, "cache key does not match configuration");
  if (I != freqs.count() || Q != config.catalog_size() || N != grid.size())
    throw Error(ErrorCode::CorruptRecord, "cache dimensions do not match configuration");
  SensingOperator op;
  op.grid = grid;
  op.freqs = freqs;
  op.config = config;
  op.catalog.assign(I, CMat());
  std::uint64_t payload_hash = 1469598103934665603ULL;
  std::vector<float> buf;
  for (int i = 0; i < I; ++i) {
    buf.resize(static_cast<std::size_t>(Q) * N * 2);
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw Error(ErrorCode::CorruptRecord, "truncated cache payload");
    payload_hash = detail::fnv1a(buf.data(), buf.size() * sizeof(float), payload_hash);
    CMat& m = op.catalog[i];
    m.resize(Q, N);
    std::size_t t = 0;
    for (int q = 0; q < Q; ++q)
      for (int n = 0; n < N; ++n) {
        m(q, n) = cplx(buf[t], buf[t + 1]);
        t += 2;
      }
  }
  std::uint64_t stored;
  f.read(reinterpret_cast<char*>(&stored), 8);
  if (!f || stored != payload_hash)
    throw Error(ErrorCode::CorruptRecord, "cache checksum mismatch");
  op.finalize();
  return op;
}

}  // namespace gmmv
