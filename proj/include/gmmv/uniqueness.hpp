// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/SVD>

#include "gmmv/common.hpp"

namespace gmmv {

/// Joint-recovery uniqueness diagnostic: a row-sparse X is the unique solution
/// of Y = A X iff |supp(X)| < (spark(A) - 1 + rank(X)) / 2. The measurement
/// guideline asks for more columns than measurements, P*I > Q.
struct UniquenessReport {
  int supp = 0;
  int spark = 0;
  int rank = 0;
  double bound = 0.0;
  bool satisfied = false;
  bool guideline_pi_gt_q = false;
};

namespace detail {

inline int matrix_rank(const CMat& A, double tol_factor = 1e-10) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::JacobiSVD<CMat> svd(A);
  const auto& s = svd.singularValues();
  double tol = tol_factor * s(0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return r;
}

inline bool any_dependent_subset(const CMat& A, int k, std::vector<int>& pick, int start) {
  if (static_cast<int>(pick.size()) == k) {
    CMat sub(A.rows(), k);
    for (int j = 0; j < k; ++j) sub.col(j) = A.col(pick[j]);
    return matrix_rank(sub) < k;
  }
  for (int c = start; c < A.cols(); ++c) {
    pick.push_back(c);
    if (any_dependent_subset(A, k, pick, c + 1)) {
      pick.pop_back();
      return true;
    }
    pick.pop_back();
  }
  return false;
}

}  // namespace detail

/// Exhaustive spark: smallest number of linearly dependent columns, or cols+1
/// if every subset is independent. Exponential; guarded to small matrices.
inline int spark(const CMat& A, int max_cols = 20) {
  if (A.cols() > max_cols)
    throw Error(ErrorCode::TooLargeForSpark, "spark is brute force; matrix has too many columns");
  int upper = static_cast<int>(std::min<Eigen::Index>(A.rows() + 1, A.cols()));
  for (int k = 1; k <= upper; ++k) {
    std::vector<int> pick;
    if (detail::any_dependent_subset(A, k, pick, 0)) return k;
  }
  if (static_cast<int>(A.cols()) > A.rows()) return static_cast<int>(A.rows() + 1);
  return static_cast<int>(A.cols() + 1);
}

inline UniquenessReport uniqueness_check(const CMat& X, const CMat& A, int p_times_i = 0,
                                         int q = 0) {
  UniquenessReport rep;
  rep.spark = spark(A);
  rep.rank = detail::matrix_rank(X);
  for (Eigen::Index n = 0; n < X.rows(); ++n)
    if (X.row(n).norm() > 1e-12) ++rep.supp;
  rep.bound = (rep.spark - 1 + rep.rank) / 2.0;
  rep.satisfied = rep.supp < rep.bound;
  rep.guideline_pi_gt_q = p_times_i > q;
  return rep;
}

}  // namespace gmmv
