// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "gmmv/common.hpp"

namespace gmmv {

/// Mixed (alpha, beta) matrix norm: the alpha-norm of the vector of row
/// beta-norms. The solver uses (1,2) as regularizer and (inf,2) as its dual;
/// (2,2) is the Frobenius norm.
struct MixedNormSpec {
  double alpha = 1.0;
  double beta = 2.0;

  static MixedNormSpec l12() { return {1.0, 2.0}; }
  static MixedNormSpec frobenius() { return {2.0, 2.0}; }
  static MixedNormSpec linf2() { return {std::numeric_limits<double>::infinity(), 2.0}; }
};

inline double mixed_norm(const CMat& J, const MixedNormSpec& spec) {
  if (spec.beta != 2.0 ||
      !(spec.alpha == 1.0 || spec.alpha == 2.0 || std::isinf(spec.alpha)))
    throw Error(ErrorCode::UnsupportedNorm, "only (1,2), (2,2) and (inf,2) are supported");
  if (std::isinf(spec.alpha)) {
    double m = 0.0;
    for (Eigen::Index n = 0; n < J.rows(); ++n) m = std::max(m, J.row(n).norm());
    return m;
  }
  if (spec.alpha == 1.0) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < J.rows(); ++n) s += J.row(n).norm();
    return s;
  }
  return J.norm();
}

inline double norm_l12(const CMat& J) { return mixed_norm(J, MixedNormSpec::l12()); }
inline double norm_linf2(const CMat& J) { return mixed_norm(J, MixedNormSpec::linf2()); }

/// Euclidean (Frobenius) projection onto the L(1,2) ball of radius tau: the
/// row-norm vector is projected onto the simplex-style L1 ball by the
/// sort-and-threshold rule, and each row rescaled accordingly.
inline CMat project_l12_ball(const CMat& J, double tau) {
  if (tau < 0.0) throw Error(ErrorCode::NegativeRadius, "ball radius must be nonnegative");
  const Eigen::Index N = J.rows();
  RVec v(N);
  for (Eigen::Index n = 0; n < N; ++n) v[n] = J.row(n).norm();
  double total = v.sum();
  if (total <= tau) return J;
  if (tau == 0.0) return CMat::Zero(J.rows(), J.cols());

  std::vector<double> u(v.data(), v.data() + N);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  for (Eigen::Index m = 0; m < N; ++m) {
    css += u[m];
    double cand = (css - tau) / static_cast<double>(m + 1);
    if (cand >= u[m]) break;
    theta = cand;
  }
  CMat out(J.rows(), J.cols());
  for (Eigen::Index n = 0; n < N; ++n) {
    double vn = v[n];
    double vp = std::max(vn - theta, 0.0);
    if (vp <= 0.0 || vn <= 0.0)
      out.row(n).setZero();
    else
      out.row(n) = J.row(n) * (vp / vn);
  }
  return out;
}

}  // namespace gmmv
