// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/SVD>

#include "gmmv/common.hpp"
#include "gmmv/dataset.hpp"
#include "gmmv/grid.hpp"
#include "gmmv/parallel.hpp"
#include "gmmv/special.hpp"

namespace gmmv {

/// Per-frequency far-field operator workspace for the linear sampling method:
/// the zero-filled data matrix F_i, its singular system, and the Tikhonov
/// filter level a_i = 0.01 * max s.
struct LsmWorkspace {
  CMat F;       // catalog receivers x sources, zeros where unmeasured
  CMat U;       // left singular vectors (economy)
  RVec s;       // singular values, descending
  double a = 0.0;
  double omega = 0.0;
  double k = 0.0;

  int D() const { return static_cast<int>(s.size()); }
};

/// Entry (q, p) is the measured scattered field; unmeasured pairs stay zero.
inline CMat build_data_matrix(const ScatterDataset& ds, int freq_index) {
  if (freq_index < 0 || freq_index >= ds.num_freqs())
    throw Error(ErrorCode::EmptyFrequency, "no data at the requested frequency");
  if (ds.data[freq_index].squaredNorm() == 0.0)
    throw Error(ErrorCode::EmptyFrequency, "data block at this frequency is all zero");
  return ds.data[freq_index];
}

inline LsmWorkspace make_lsm_workspace(const ScatterDataset& ds, int freq_index,
                                       const BackgroundModel& bg) {
  LsmWorkspace ws;
  ws.F = build_data_matrix(ds, freq_index);
  ws.omega = ds.freqs.omega(freq_index);
  ws.k = bg.k(ws.omega);
  Eigen::BDCSVD<CMat> svd(ws.F, Eigen::ComputeThinU);
  ws.U = svd.matrixU();
  ws.s = svd.singularValues();
  ws.a = 0.01 * ws.s(0);
  return ws;
}

/// Right-hand side of the sampling equation at x_s: per catalog receiver q,
/// f_q = (w mu0 / 4) H0^(1)(-k r) = -(w mu0 / 4) H0^(2)(k r), the branch
/// consistent with the exp(+i w t) outgoing wave.
inline CVec lsm_rhs(const Vec2& x_s, const std::vector<Vec2>& receivers, double omega,
                    double k) {
  CVec f(receivers.size());
  const double amp = omega * constants::mu0 / 4.0;
  for (std::size_t q = 0; q < receivers.size(); ++q) {
    double r = distance(x_s, receivers[q]);
    if (r <= 0.0) throw Error(ErrorCode::SampleOnReceiver, "sampling point on a receiver");
    f[q] = -amp * hankel2(0, k * r);
  }
  return f;
}

/// ||g||^2 = sum_d (s_d / (s_d^2 + a^2))^2 |u_d^H f|^2.
inline double lsm_indicator(const LsmWorkspace& ws, const CVec& f) {
  CVec proj = ws.U.adjoint() * f;
  double acc = 0.0;
  for (int d = 0; d < ws.D(); ++d) {
    double filt = ws.s(d) / (ws.s(d) * ws.s(d) + ws.a * ws.a);
    acc += filt * filt * std::norm(proj(d));
  }
  return acc;
}

/// Multi-frequency LSM image on the inversion grid: per-frequency indicator
/// maps normalized by their grid maxima, averaged, then inverted, so scatterer
/// support shows up as large gamma.
inline RVec lsm_image(const ScatterDataset& ds, const std::vector<int>& freq_indices,
                      const Grid2D& grid, const BackgroundModel& bg) {
  if (freq_indices.empty()) throw Error(ErrorCode::EmptyFrequency, "no frequencies selected");
  const int N = grid.size();
  RVec mf = RVec::Zero(N);
  for (int idx : freq_indices) {
    LsmWorkspace ws = make_lsm_workspace(ds, idx, bg);
    RVec gi(N);
    parallel_for(N, [&](std::int64_t n) {
      CVec f = lsm_rhs(grid.center(static_cast<int>(n)), ds.config.receivers, ws.omega, ws.k);
      gi[n] = lsm_indicator(ws, f);
    });
    double mx = gi.maxCoeff();
    if (!(mx > 0.0)) throw Error(ErrorCode::AllZeroImage, "indicator map is identically zero");
    mf += gi / mx;
  }
  mf /= static_cast<double>(freq_indices.size());
  RVec gamma(N);
  for (int n = 0; n < N; ++n) gamma[n] = 1.0 / mf[n];
  return gamma;
}

}  // namespace gmmv
