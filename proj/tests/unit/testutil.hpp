// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "gmmv/dataset.hpp"
#include "gmmv/measurement.hpp"
#include "gmmv/sensing.hpp"

namespace testutil {

/// Deterministic complex standard normals for test fixtures.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double normal() { return g_.normal(); }
  gmmv::cplx cnormal() { return {g_.normal(), g_.normal()}; }
  gmmv::CMat cmatrix(int rows, int cols) {
    gmmv::CMat m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = cnormal();
    return m;
  }

 private:
  gmmv::detail::GaussianRng g_;
};

/// Synthetic GMMV problem: random per-frequency catalog matrices over a token
/// geometry, with every receiver active. "Sources" here are just column labels.
struct SyntheticProblem {
  gmmv::SensingOperator op;
  gmmv::ScatterDataset data;
  gmmv::CMat truth;  // N x (P*I)
  std::vector<int> support;
};

inline SyntheticProblem make_synthetic(std::uint64_t seed, int n_cells, int n_rx, int n_src,
                                       int n_freq, int sparsity, int cv_count = 0) {
  Rng rng(seed);
  SyntheticProblem prob;
  // token geometry: receivers on a ring well outside a tiny grid
  gmmv::RingSpec src_ring{10.0, 0.0, 360.0 / n_src, n_src};
  gmmv::RingSpec rx_ring{11.0, 0.0, 360.0 / n_rx, n_rx};
  auto meas = gmmv::make_full_ring_config(src_ring, rx_ring);
  if (cv_count > 0) meas = gmmv::split_cv(meas, cv_count, gmmv::CvStrategy::EveryKth);

  // grid exists only to carry N = n_cells
  prob.op.grid = gmmv::Grid2D(-0.5, -0.5, 1.0 / n_cells, n_cells, 1);
  std::vector<double> fs;
  for (int i = 0; i < n_freq; ++i) fs.push_back(1e9 * (i + 1));
  prob.op.freqs = gmmv::FrequencySet(fs);
  prob.op.config = meas;
  for (int i = 0; i < n_freq; ++i)
    prob.op.catalog.push_back(rng.cmatrix(n_rx, n_cells) / std::sqrt(2.0 * n_rx));
  prob.op.finalize();

  // jointly sparse ground truth
  prob.truth = gmmv::CMat::Zero(n_cells, n_src * n_freq);
  std::vector<int> pool(n_cells);
  for (int i = 0; i < n_cells; ++i) pool[i] = i;
  for (int j = 0; j < sparsity; ++j) {
    int r = j + static_cast<int>(std::abs(rng.normal()) * 1e6) % (n_cells - j);
    std::swap(pool[j], pool[r]);
    prob.support.push_back(pool[j]);
  }
  std::sort(prob.support.begin(), prob.support.end());
  for (int s : prob.support)
    for (int c = 0; c < n_src * n_freq; ++c) prob.truth(s, c) = rng.cnormal();

  prob.data.freqs = prob.op.freqs;
  prob.data.config = meas;
  auto blocks = gmmv::apply_forward(prob.op, prob.truth, gmmv::RowClass::All);
  prob.data.data = blocks;
  return prob;
}

/// Naive per-column triple-loop forward, independent of the Eigen path.
inline gmmv::DataBlocks naive_forward(const gmmv::SensingOperator& op, const gmmv::CMat& J,
                                      gmmv::RowClass cls) {
  gmmv::DataBlocks out(op.num_freqs());
  for (int i = 0; i < op.num_freqs(); ++i) {
    out[i] = gmmv::CMat::Zero(op.config.catalog_size(), op.num_sources());
    for (int p = 0; p < op.num_sources(); ++p) {
      for (std::size_t j = 0; j < op.config.active[p].size(); ++j) {
        bool is_cv = op.config.roles[p][j] == gmmv::RxRole::Cv;
        if (cls != gmmv::RowClass::All && (cls == gmmv::RowClass::Cv) != is_cv) continue;
        int q = op.config.active[p][j];
        gmmv::cplx acc = 0.0;
        for (int n = 0; n < op.num_cells(); ++n)
          acc += op.catalog[i](q, n) * J(n, i * op.num_sources() + p);
        out[i](q, p) = acc;
      }
    }
  }
  return out;
}

inline gmmv::CMat naive_adjoint(const gmmv::SensingOperator& op, const gmmv::DataBlocks& R,
                                gmmv::RowClass cls) {
  gmmv::CMat out = gmmv::CMat::Zero(op.num_cells(), op.num_columns());
  for (int i = 0; i < op.num_freqs(); ++i) {
    for (int p = 0; p < op.num_sources(); ++p) {
      for (std::size_t j = 0; j < op.config.active[p].size(); ++j) {
        bool is_cv = op.config.roles[p][j] == gmmv::RxRole::Cv;
        if (cls != gmmv::RowClass::All && (cls == gmmv::RowClass::Cv) != is_cv) continue;
        int q = op.config.active[p][j];
        for (int n = 0; n < op.num_cells(); ++n)
          out(n, i * op.num_sources() + p) += std::conj(op.catalog[i](q, n)) * R[i](q, p);
      }
    }
  }
  return out;
}

}  // namespace testutil
