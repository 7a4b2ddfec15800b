#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string_view>

#include "dgsqp/numerics.hpp"

namespace dgsqp {

/**
 * Dense convex QP
 *
 *   minimize    1/2 p^T B p + h^T p
 *   subject to  c + G p <= 0
 *
 * B must be symmetric positive semidefinite (the SQP loop passes an
 * epsilon-shifted PSD projection, so it is positive definite in practice).
 */
struct QPSubproblem {
  Matrix B;
  Vector h;
  Matrix G;
  Vector c;
};

enum class QPStatus { kOptimal, kInfeasible, kMaxIterations };

inline std::string_view to_string(QPStatus s) {
  switch (s) {
    case QPStatus::kOptimal: return "optimal";
    case QPStatus::kInfeasible: return "infeasible";
    case QPStatus::kMaxIterations: return "max-iterations";
  }
  return "unknown";
}

struct QPSolution {
  Vector p;
  /// Multipliers of c + G p <= 0, one per row of G.
  Vector d;
  QPStatus status = QPStatus::kMaxIterations;
  int iterations = 0;
};

struct QPOptions {
  double tolerance = 1e-8;
  int max_iterations = 100;
  /// Feasibility stall window used for infeasibility detection.
  int stall_iterations = 20;
  double stall_threshold = 1e-6;
  bool polish = true;
};

/// Residuals of the QP optimality conditions at (p, d).
struct QPResiduals {
  double stationarity = 0.0;    // ||B p + h + G^T d||_inf
  double feasibility = 0.0;     // max(0, max(c + G p))
  double complementarity = 0.0; // |d^T (c + G p)|
  double dual_negativity = 0.0; // max(0, -min(d))
};

inline QPResiduals qp_residuals(const QPSubproblem& qp, const Vector& p,
                                const Vector& d) {
  QPResiduals r;
  Vector grad = qp.B * p + qp.h;
  if (qp.G.rows() > 0) grad.noalias() += qp.G.transpose() * d;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (qp.G.rows() > 0) {
    const Vector slack = qp.c + qp.G * p;
    r.feasibility = std::max(0.0, slack.maxCoeff());
    r.complementarity = std::abs(d.dot(slack));
    r.dual_negativity = std::max(0.0, -d.minCoeff());
  }
  return r;
}

namespace detail {

inline double inf_norm(const Vector& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

// Largest step in (0, 1] keeping v + alpha * dv >= (1 - fraction) * v.
inline double max_step(const Vector& v, const Vector& dv, double fraction) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -fraction * v(i) / dv(i));
  }
  return alpha;
}

// Factorizes the (symmetric) normal matrix, adding diagonal regularization if
// the plain Cholesky factorization breaks down.
class NormalSolver {
 public:
  explicit NormalSolver(const Matrix& m) {
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) return;
    const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    for (double reg = 1e-14; reg < 1e-2; reg *= 100.0) {
      Matrix shifted = m;
      shifted.diagonal().array() += reg * scale;
      llt_.compute(shifted);
      if (llt_.info() == Eigen::Success) return;
    }
    ok_ = false;
  }
  bool ok() const { return ok_; }
  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }

 private:
  Eigen::LLT<Matrix> llt_;
  bool ok_ = true;
};

// Solves the equality-constrained problem on the active rows and accepts the
// result if it is primal feasible, dual nonnegative and at least as accurate
// as the interior-point iterate.
inline bool polish(const QPSubproblem& qp, QPSolution& sol, const Vector& slack,
                   double tolerance) {
  const int n = static_cast<int>(qp.h.size());
  const int m = static_cast<int>(qp.c.size());
  std::vector<int> active;
  for (int i = 0; i < m; ++i) {
    if (sol.d(i) > slack(i)) active.push_back(i);
  }
  const int na = static_cast<int>(active.size());
  if (na > n) return false;
  Matrix kkt = Matrix::Zero(n + na, n + na);
  Vector rhs(n + na);
  kkt.topLeftCorner(n, n) = qp.B;
  rhs.head(n) = -qp.h;
  for (int a = 0; a < na; ++a) {
    kkt.block(n + a, 0, 1, n) = qp.G.row(active[a]);
    kkt.block(0, n + a, n, 1) = qp.G.row(active[a]).transpose();
    rhs(n + a) = -qp.c(active[a]);
  }
  const Eigen::PartialPivLU<Matrix> lu(kkt);
  const Vector z = lu.solve(rhs);
  if (!z.allFinite()) return false;
  if ((kkt * z - rhs).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
    return false;
  }
  Vector p = z.head(n);
  Vector d = Vector::Zero(m);
  for (int a = 0; a < na; ++a) d(active[a]) = z(n + a);
  if (d.size() && d.minCoeff() < -tolerance) return false;
  d = d.cwiseMax(0.0);

  const QPResiduals before = qp_residuals(qp, sol.p, sol.d);
  const QPResiduals after = qp_residuals(qp, p, d);
  const double worst_before = std::max({before.stationarity, before.feasibility,
                                        before.complementarity});
  const double worst_after = std::max({after.stationarity, after.feasibility,
                                       after.complementarity});
  if (worst_after > std::max(worst_before, tolerance)) return false;
  sol.p = std::move(p);
  sol.d = std::move(d);
  return true;
}

}  // namespace detail

/**
 * Primal-dual interior point method with Mehrotra predictor-corrector on the
 * slack/multiplier complementarity, followed by an active-set polish.
 *
 * Infeasibility is declared when the primal residual stays above
 * `stall_threshold` without improving by 1% for `stall_iterations` iterations.
 */
inline QPSolution solve_qp(const QPSubproblem& qp, const QPOptions& options = {}) {
  const int n = static_cast<int>(qp.h.size());
  const int m = static_cast<int>(qp.c.size());
  if (qp.B.rows() != n || qp.B.cols() != n || qp.G.rows() != m ||
      (m > 0 && qp.G.cols() != n)) {
    throw Error("solve_qp: inconsistent dimensions");
  }

  QPSolution sol;
  if (m == 0) {
    detail::NormalSolver chol(qp.B);
    sol.p = chol.solve(-qp.h);
    sol.d = Vector(0);
    sol.status = chol.ok() && sol.p.allFinite() ? QPStatus::kOptimal
                                                : QPStatus::kMaxIterations;
    return sol;
  }

  const double h_scale = 1.0 + detail::inf_norm(qp.h);
  const double c_scale = 1.0 + detail::inf_norm(qp.c);

  Vector p = Vector::Zero(n);
  Vector w = (-qp.c).cwiseMax(1.0);  // slack: c + G p + w = 0
  Vector z = Vector::Ones(m);

  double best_primal = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int it = 0; it < options.max_iterations; ++it) {
    sol.iterations = it;
    const Vector r_dual = qp.B * p + qp.h + qp.G.transpose() * z;
    const Vector r_primal = qp.G * p + qp.c + w;
    const double mu = w.dot(z) / m;
    const double dual_norm = detail::inf_norm(r_dual);
    const double primal_norm = detail::inf_norm(r_primal);

    if (dual_norm <= options.tolerance * h_scale &&
        primal_norm <= options.tolerance * c_scale && mu <= options.tolerance) {
      sol.status = QPStatus::kOptimal;
      break;
    }

    const double primal_rel = primal_norm / c_scale;
    if (primal_rel < 0.99 * best_primal) {
      best_primal = primal_rel;
      stall = 0;
    } else if (primal_rel > options.stall_threshold &&
               ++stall >= options.stall_iterations) {
      sol.status = QPStatus::kInfeasible;
      break;
    }

    const Vector scaling = z.cwiseQuotient(w);  // Z W^-1
    Matrix normal = qp.B;
    normal.noalias() += qp.G.transpose() * scaling.asDiagonal() * qp.G;
    const detail::NormalSolver chol(normal);
    if (!chol.ok()) break;

    // Newton direction for complementarity target r_comp = W Z e - target.
    auto direction = [&](const Vector& comp_rhs, Vector& dp, Vector& dw,
                         Vector& dz) {
      // comp_rhs is the right-hand side of Z dw + W dz = comp_rhs.
      const Vector winv_rc = comp_rhs.cwiseQuotient(w);
      const Vector rhs =
          -r_dual - qp.G.transpose() *
                        (scaling.cwiseProduct(r_primal) + winv_rc);
      dp = chol.solve(rhs);
      dz = scaling.cwiseProduct(qp.G * dp + r_primal) + winv_rc;
      dw = -r_primal - qp.G * dp;
    };

    Vector dp_aff, dw_aff, dz_aff;
    direction(-w.cwiseProduct(z), dp_aff, dw_aff, dz_aff);
    const double alpha_aff = std::min(detail::max_step(w, dw_aff, 1.0),
                                      detail::max_step(z, dz_aff, 1.0));
    const double mu_aff =
        (w + alpha_aff * dw_aff).dot(z + alpha_aff * dz_aff) / m;
    const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3);

    Vector dp, dw, dz;
    const Vector comp = -w.cwiseProduct(z) -
                        dw_aff.cwiseProduct(dz_aff) +
                        Vector::Constant(m, sigma * mu);
    direction(comp, dp, dw, dz);

    const double fraction = 0.995;
    const double alpha = std::min(detail::max_step(w, dw, fraction),
                                  detail::max_step(z, dz, fraction));
    p += alpha * dp;
    w += alpha * dw;
    z += alpha * dz;
    w = w.cwiseMax(1e-300);
    z = z.cwiseMax(1e-300);
    sol.iterations = it + 1;
  }

  sol.p = p;
  sol.d = z;
  if (sol.status == QPStatus::kInfeasible) return sol;

  const QPResiduals res = qp_residuals(qp, p, z);
  if (options.polish) {
    if (detail::polish(qp, sol, w, 1e-9) && sol.status != QPStatus::kOptimal) {
      const QPResiduals polished = qp_residuals(qp, sol.p, sol.d);
      if (polished.stationarity <= 1e-8 * h_scale &&
          polished.feasibility <= 1e-8 * c_scale &&
          polished.complementarity <= 1e-8 * c_scale) {
        sol.status = QPStatus::kOptimal;
      }
    }
  } else if (sol.status != QPStatus::kOptimal &&
             res.stationarity <= 1e-8 * h_scale &&
             res.feasibility <= 1e-8 * c_scale) {
    sol.status = QPStatus::kOptimal;
  }
  return sol;
}

}  // namespace dgsqp
