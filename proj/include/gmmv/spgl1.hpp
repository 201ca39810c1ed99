// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gmmv/common.hpp"
#include "gmmv/norms.hpp"
#include "gmmv/sensing.hpp"

namespace gmmv {

struct SolverOptions {
  int max_inner_per_tau = 200;    // inner SPG iterations before forcing a tau update
  int max_total_iterations = 1000;
  double inner_tolerance = 1e-5;  // projected-gradient optimality certificate
  double bb_min = 1e-16;
  double bb_max = 1e5;
  int linesearch_memory = 3;      // nonmonotone reference window
  double sufficient_decrease = 1e-4;
  int max_backtracks = 12;
  int delta_n = 30;               // CV patience
  double bp_tolerance = 1e-4;     // |phi - sigma| <= bp_tolerance * ||Y||_F stop (BP mode)

  /// Called after every accepted inner iteration (CV as well as BP mode):
  /// observer(iteration, J, r_rec, r_cv). Residuals are in normalized units.
  std::function<void(int, const CMat&, double, double)> observer;
};

struct TauRecord {
  int outer = 0;
  double tau = 0.0;
  double phi = 0.0;        // phi_GMMV(tau) at the inner solve returned for this tau
  double phi_prime = 0.0;  // Pareto derivative used for the Newton update
  double certificate = 0.0;
};

/// Newton state for probing the Pareto curve phi(tau).
struct ParetoState {
  double tau = 0.0;
  double sigma = 0.0;      // target residual (0 in CV mode)
  double phi = 0.0;        // current phi(tau)
  double phi_prime = 0.0;  // negative
  int outer = 0;
};

/// CV bookkeeping: residual histories per inner iteration, the running best
/// iterate, and the patience counter state.
struct CvState {
  std::vector<double> r_rec;  // index = inner iteration (0 = initial point)
  std::vector<double> r_cv;
  int n_iter = 0;
  int n_opt = 0;
  double best_cv = std::numeric_limits<double>::infinity();
  CMat best_J;

  void record(int iter, double rec, double cv, const CMat& J) {
    r_rec.push_back(rec);
    r_cv.push_back(cv);
    n_iter = iter;
    if (cv < best_cv) {
      best_cv = cv;
      n_opt = iter;
      best_J = J;
    }
  }
  /// True once iteration n_iter + 1 would satisfy N_iter > N_opt + delta_n;
  /// exactly delta_n non-improving iterations run past the CV minimum.
  bool should_stop(int delta_n) const { return n_iter >= n_opt + delta_n; }
};

struct InversionResult {
  CMat J;                        // contrast sources at the returned iterate
  std::vector<double> r_rec;     // normalized residual histories per iteration
  std::vector<double> r_cv;
  std::vector<TauRecord> tau_path;
  int n_iter = 0;
  int n_opt = 0;
  double sigma_hat = 0.0;        // r_rec(n_opt) in data units
  double y_norm_recon = 0.0;     // ||Y||_F over RECON rows, data units
  bool cv_mode = false;
};

/// phi'(tau) = -|| Phi^H (Phi J - Y) ||_{inf,2} / || Phi J - Y ||_F.
inline double pareto_derivative(const SensingOperator& op, const CMat& J, const DataBlocks& Y,
                                RowClass cls = RowClass::Recon) {
  DataBlocks R = apply_forward(op, J, cls);
  double rnorm2 = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    R[i] -= Y[i].cwiseProduct(op.mask(cls).cast<cplx>());
    rnorm2 += R[i].squaredNorm();
  }
  double rnorm = std::sqrt(rnorm2);
  if (rnorm == 0.0) throw Error(ErrorCode::ZeroResidual, "Pareto derivative needs a nonzero residual");
  CMat G = apply_adjoint(op, R, cls);
  return -norm_linf2(G) / rnorm;
}

/// One Newton step on the Pareto curve, clamped so tau never shrinks while the
/// residual still exceeds the target (the root lies rightward there).
inline double newton_update_tau(const ParetoState& st) {
  if (!(st.phi_prime < 0.0))
    throw Error(ErrorCode::NonnegativeDerivative, "Pareto derivative must be negative");
  double tau_next = st.tau + (st.sigma - st.phi) / st.phi_prime;
  if (st.phi > st.sigma && tau_next <= st.tau)
    tau_next = st.tau > 0.0 ? 2.0 * st.tau : tau_next;
  return tau_next;
}

namespace detail {

/// Shared inner state of the spectral projected-gradient iteration.
struct SpgState {
  CMat J;
  DataBlocks R;   // Phi J - Y on RECON rows
  CMat G;         // Phi^H R
  double f = 0.0; // 0.5 ||R||_F^2
  double bb = 1.0;
  std::deque<double> fmem;

  double phi() const { return std::sqrt(2.0 * f); }
};

inline double blocks_sqnorm(const DataBlocks& B) {
  double s = 0.0;
  for (const auto& b : B) s += b.squaredNorm();
  return s;
}

inline DataBlocks residual(const SensingOperator& op, const CMat& J, const DataBlocks& Yr) {
  DataBlocks R = apply_forward(op, J, RowClass::Recon);
  for (std::size_t i = 0; i < R.size(); ++i) R[i] -= Yr[i];
  return R;
}

inline void init_state(SpgState& st, const SensingOperator& op, const DataBlocks& Yr,
                       double tau) {
  st.J = project_l12_ball(st.J, tau);
  st.R = residual(op, st.J, Yr);
  st.f = 0.5 * blocks_sqnorm(st.R);
  st.G = apply_adjoint(op, st.R, RowClass::Recon);
  double gn = st.G.norm();
  st.bb = gn > 0 ? std::max(1.0, st.J.norm()) / gn : 1.0;
  st.fmem.clear();
  st.fmem.push_back(st.f);
}

inline double certificate(const SpgState& st, double tau) {
  CMat step = st.J - project_l12_ball(st.J - st.G, tau);
  return step.norm() / std::max(1.0, st.J.norm());
}

}  // namespace detail

/// One spectral projected-gradient iteration on the LS_tau subproblem:
/// Barzilai-Borwein step, curvilinear nonmonotone Armijo backtracking against
/// the max of the last few objectives, projection onto the L(1,2) ball.
/// Throws LINESEARCH_FAILED when no acceptable step exists at this precision.
inline void spg_lasso_step(detail::SpgState& st, const SensingOperator& op, const DataBlocks& Yr,
                           double tau, const SolverOptions& opt) {
  double fmax = *std::max_element(st.fmem.begin(), st.fmem.end());
  double alpha = std::min(opt.bb_max, std::max(opt.bb_min, st.bb));
  for (int bt = 0; bt <= opt.max_backtracks; ++bt) {
    CMat Jt = project_l12_ball(st.J - alpha * st.G, tau);
    CMat dJ = Jt - st.J;
    double gtd = (st.G.conjugate().cwiseProduct(dJ)).sum().real();
    DataBlocks Rt = detail::residual(op, Jt, Yr);
    double ft = 0.5 * detail::blocks_sqnorm(Rt);
    if (ft <= fmax + opt.sufficient_decrease * gtd) {
      CMat Gt = apply_adjoint(op, Rt, RowClass::Recon);
      CMat dG = Gt - st.G;
      double sty = (dJ.conjugate().cwiseProduct(dG)).sum().real();
      double sts = dJ.squaredNorm();
      st.bb = sty > 0 ? std::min(opt.bb_max, std::max(opt.bb_min, sts / sty)) : opt.bb_max;
      st.J = std::move(Jt);
      st.R = std::move(Rt);
      st.G = std::move(Gt);
      st.f = ft;
      st.fmem.push_back(ft);
      while (static_cast<int>(st.fmem.size()) > opt.linesearch_memory) st.fmem.pop_front();
      return;
    }
    alpha *= 0.5;
  }
  throw Error(ErrorCode::LinesearchFailed, "no sufficient decrease after max backtracks");
}

namespace detail {

struct DriverSetup {
  DataBlocks Yr;      // normalized RECON data (holes zero)
  DataBlocks Ycv;     // normalized CV data
  double y_norm = 0;  // normalization constant = ||Y||_F over RECON rows
  double ycv_norm0 = 0;
};

inline DriverSetup make_setup(const SensingOperator& op, const ScatterDataset& ds) {
  op.check_dataset(ds);
  DriverSetup s;
  const CMat mr = op.mask(RowClass::Recon).cast<cplx>();
  const CMat mc = op.mask(RowClass::Cv).cast<cplx>();
  s.Yr.resize(ds.num_freqs());
  s.Ycv.resize(ds.num_freqs());
  double yr2 = 0.0;
  for (int i = 0; i < ds.num_freqs(); ++i) {
    s.Yr[i] = ds.data[i].cwiseProduct(mr);
    s.Ycv[i] = ds.data[i].cwiseProduct(mc);
    yr2 += s.Yr[i].squaredNorm();
  }
  s.y_norm = std::sqrt(yr2);
  if (!(s.y_norm > 0.0)) throw Error(ErrorCode::ZeroResidual, "dataset has no RECON energy");
  for (auto& b : s.Yr) b /= s.y_norm;
  for (auto& b : s.Ycv) b /= s.y_norm;
  s.ycv_norm0 = std::sqrt(blocks_sqnorm(s.Ycv));
  return s;
}

inline double cv_residual(const SensingOperator& op, const CMat& J, const DataBlocks& Ycv) {
  DataBlocks Rc = apply_forward(op, J, RowClass::Cv);
  for (std::size_t i = 0; i < Rc.size(); ++i) Rc[i] -= Ycv[i];
  return std::sqrt(blocks_sqnorm(Rc));
}

/// Core Newton-over-SPG loop. In CV mode sigma = 0 and stopping rests on the
/// CV patience rule; in BP mode stopping is |phi - sigma| <= tol.
inline InversionResult run_driver(const SensingOperator& op, const ScatterDataset& ds,
                                  double sigma_data_units, bool cv_mode,
                                  const SolverOptions& opt) {
  DriverSetup setup = make_setup(op, ds);
  if (cv_mode && !ds.config.has_cv())
    throw Error(ErrorCode::CvTooLarge, "CV mode requires a CV split");
  const double sigma = cv_mode ? 0.0 : sigma_data_units / setup.y_norm;

  InversionResult res;
  res.cv_mode = cv_mode;
  res.y_norm_recon = setup.y_norm;

  SpgState st;
  st.J = CMat::Zero(op.num_cells(), op.num_columns());
  CvState cv;
  cv.record(0, 1.0, setup.ycv_norm0, st.J);

  // phi(0) = 1 in normalized units; done if the target is already met.
  if (sigma >= 1.0) {
    res.J = st.J;
    res.r_rec = cv.r_rec;
    res.r_cv = cv.r_cv;
    res.sigma_hat = setup.y_norm;
    return res;
  }

  st.R = residual(op, st.J, setup.Yr);
  st.G = apply_adjoint(op, st.R, RowClass::Recon);
  double dual0 = norm_linf2(st.G);
  if (!(dual0 > 0.0)) throw Error(ErrorCode::ZeroResidual, "adjoint of the data is zero");

  ParetoState pareto;
  pareto.sigma = sigma;
  pareto.phi = 1.0;
  pareto.phi_prime = -dual0;  // phi(0) = 1 after normalization
  double tau = newton_update_tau(pareto);
  pareto.tau = tau;

  int iter = 0;
  bool done = false;
  bool budget_hit = false;
  while (!done) {
    ++pareto.outer;
    init_state(st, op, setup.Yr, tau);
    int inner = 0;
    double cert = certificate(st, tau);
    while (cert > opt.inner_tolerance && inner < opt.max_inner_per_tau) {
      try {
        spg_lasso_step(st, op, setup.Yr, tau, opt);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::LinesearchFailed) break;  // numerically converged
        throw;
      }
      ++iter;
      ++inner;
      double rrec = st.phi();
      double rcv = cv_residual(op, st.J, setup.Ycv);
      cv.record(iter, rrec, rcv, st.J);
      if (opt.observer) opt.observer(iter, st.J, rrec, rcv);
      if (cv_mode && cv.should_stop(opt.delta_n)) {
        done = true;
        break;
      }
      if (iter >= opt.max_total_iterations) {
        if (cv_mode)
          throw Error(ErrorCode::MaxIterations, "no CV minimum found within the iteration budget");
        budget_hit = true;
        break;
      }
      cert = certificate(st, tau);
    }

    TauRecord rec;
    rec.outer = pareto.outer;
    rec.tau = tau;
    rec.phi = st.phi();
    rec.certificate = certificate(st, tau);
    if (done) {
      rec.phi_prime = 0.0;
      res.tau_path.push_back(rec);
      break;
    }

    pareto.phi = st.phi();
    if (!cv_mode && std::abs(pareto.phi - sigma) <= opt.bp_tolerance) {
      rec.phi_prime = 0.0;
      res.tau_path.push_back(rec);
      break;
    }
    if (budget_hit)
      throw Error(ErrorCode::MaxIterations, "iteration budget exhausted before reaching sigma");

    double dual = norm_linf2(st.G);
    if (pareto.phi == 0.0 || dual == 0.0) {
      rec.phi_prime = 0.0;
      res.tau_path.push_back(rec);
      break;  // exact data fit; nothing left to probe
    }
    pareto.phi_prime = -dual / pareto.phi;
    rec.phi_prime = pareto.phi_prime;
    res.tau_path.push_back(rec);
    tau = newton_update_tau(pareto);
    pareto.tau = tau;
  }

  res.n_iter = cv.n_iter;
  if (cv_mode) {
    res.J = cv.best_J * setup.y_norm;
    res.n_opt = cv.n_opt;
    res.sigma_hat = cv.r_rec[cv.n_opt] * setup.y_norm;
  } else {
    res.J = st.J * setup.y_norm;
    res.n_opt = cv.n_iter;
    res.sigma_hat = st.phi() * setup.y_norm;
  }
  res.r_rec = cv.r_rec;
  res.r_cv = cv.r_cv;
  return res;
}

}  // namespace detail

/// CV-stopped inversion: sigma is initialized to zero and the iteration halts
/// once the CV residual has not improved for delta_n iterations; the iterate
/// at the CV minimum is returned together with the implied noise estimate.
inline InversionResult solve_gmmv_cv(const SensingOperator& op, const ScatterDataset& ds,
                                     const SolverOptions& opt = {}) {
  return detail::run_driver(op, ds, 0.0, true, opt);
}

/// Basis-pursuit-denoise mode with a known residual target sigma (data units).
inline InversionResult solve_gmmv_sigma(const SensingOperator& op, const ScatterDataset& ds,
                                        double sigma, const SolverOptions& opt = {}) {
  if (sigma < 0.0) throw Error(ErrorCode::BadUnits, "sigma must be nonnegative");
  return detail::run_driver(op, ds, sigma, false, opt);
}

/// Residual history export: two-column text (iteration, value).
inline void write_residual_history(const std::vector<double>& values, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  for (std::size_t i = 0; i < values.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%zu %.12g\n", i, values[i]);
    f << buf;
  }
}

}  // namespace gmmv
