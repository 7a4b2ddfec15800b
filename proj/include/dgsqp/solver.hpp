#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "dgsqp/game.hpp"
#include "dgsqp/numerics.hpp"
#include "dgsqp/qp.hpp"

namespace dgsqp {

enum class SolveStatus {
  kConvergedKkt,
  kConvergedRelative,
  kMaxIterations,
  kDiverged,
  kQpInfeasible,
  kLineSearchFailure,
};

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConvergedKkt: return "converged-kkt";
    case SolveStatus::kConvergedRelative: return "converged-relative";
    case SolveStatus::kMaxIterations: return "max-iterations";
    case SolveStatus::kDiverged: return "diverged";
    case SolveStatus::kQpInfeasible: return "qp-infeasible";
    case SolveStatus::kLineSearchFailure: return "line-search-failure";
  }
  return "unknown";
}

/// Step acceptance strategy. kBacktracking is the plain monotone Armijo search
/// used as the ablation baseline.
enum class LineSearchKind { kWatchdog, kBacktracking };

/// kStationarityOnly drops the l1 feasibility term (mu is always zero).
enum class MeritKind { kFull, kStationarityOnly };

struct SolverConfig {
  double eps_stationarity = 1e-3;
  double eps_feasibility = 1e-3;
  double eps_complementarity = 1e-3;
  int max_iterations = 50;
  double divergence_threshold = 1e5;
  /// epsilon in B = proj_psd((L + L^T) / 2) + epsilon I.
  double hessian_regularization = 1e-5;
  double merit_rho = 0.5;
  /// Maximum number of relaxed full steps P of the watchdog.
  int watchdog_steps = 5;
  /// zeta in the sufficient decrease condition.
  double sufficient_decrease = 1e-4;
  /// tau, the backtracking contraction factor.
  double backtracking_tau = 0.5;
  double alpha_min = 1e-8;
  double relative_tol = 1e-6;
  int relative_patience = 5;
  /// Tikhonov shift for the least-squares multiplier initialization.
  double dual_init_regularization = 1e-8;
  LineSearchKind line_search = LineSearchKind::kWatchdog;
  MeritKind merit = MeritKind::kFull;
  bool exact_hessian = false;
  double fd_step = 1e-5;
  bool record_iterates = false;
  QPOptions qp;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("invalid solver config: ") + what);
    };
    require(eps_stationarity > 0 && eps_feasibility > 0 && eps_complementarity > 0,
            "tolerances must be positive");
    require(max_iterations >= 1, "max_iterations must be >= 1");
    require(divergence_threshold > 0, "divergence_threshold must be positive");
    require(hessian_regularization >= 0, "hessian_regularization must be >= 0");
    require(merit_rho > 0 && merit_rho < 1, "merit_rho must lie in (0, 1)");
    require(watchdog_steps >= 1, "watchdog_steps must be >= 1");
    require(sufficient_decrease > 0 && sufficient_decrease < 0.5,
            "sufficient_decrease must lie in (0, 0.5)");
    require(backtracking_tau > 0 && backtracking_tau < 1,
            "backtracking_tau must lie in (0, 1)");
    require(alpha_min > 0 && alpha_min < 1, "alpha_min must lie in (0, 1)");
    require(relative_tol > 0 && relative_patience >= 1,
            "relative stall parameters must be positive");
    require(fd_step > 0, "fd_step must be positive");
  }
};

/// Primal inputs (flattened), shared multipliers and slacks.
struct Iterate {
  Vector u;
  Vector lambda;
  Vector s;
};

struct IterationRecord {
  int iteration = 0;
  double stationarity = 0.0;     // ||grad L||_inf
  double max_violation = 0.0;    // ||max(0, C)||_inf
  double complementarity = 0.0;  // |lambda^T C|
  double merit = 0.0;            // phi at the iterate with the chosen mu
  double mu = 0.0;
  double feasibility_gap = 0.0;  // ||C - s||_1
  double directional_derivative = 0.0;
  double step_norm = 0.0;        // ||p_u||_inf
  double alpha = 0.0;
  int qp_solves = 0;
  int relaxed_steps = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kMaxIterations;
  Iterate final;
  int iterations = 0;
  int qp_solves = 0;
  double stationarity = 0.0;
  double max_violation = 0.0;
  double complementarity = 0.0;
  std::vector<IterationRecord> trace;
  /// (u_q, lambda_q) for q = 0..iterations when record_iterates is set.
  std::vector<Iterate> iterates;
};

// ---------------------------------------------------------------------------
// Merit function pieces
// ---------------------------------------------------------------------------

inline Vector refreshed_slack(const Vector& constraints) {
  return constraints.cwiseMin(0.0);
}

/// Stacked gradient grad L(u, lambda).
inline Vector stationarity(const DynamicGame& game, const Iterate& it) {
  return lagrangian_gradient(game, it.u, it.lambda).stationarity;
}

/// phi = 1/2 ||grad L||_2^2 + mu ||C - s||_1 from precomputed values.
inline double merit_value(const FirstOrderValues& values, const Vector& s,
                          double mu) {
  double phi = 0.5 * values.stationarity.squaredNorm();
  if (mu != 0.0 && values.constraints.size() > 0) {
    phi += mu * (values.constraints - s).lpNorm<1>();
  }
  return phi;
}

inline double merit(const DynamicGame& game, const Iterate& it, double mu) {
  return merit_value(lagrangian_gradient(game, it.u, it.lambda), it.s, mu);
}

/// grad_{u,lambda} gamma . [p_u; p_lambda] = grad L^T (L p_u + G^T p_lambda),
/// with the exact (unsymmetrized) stacked Hessian L.
inline double gamma_directional_derivative(const Vector& grad_lagrangian,
                                           const Matrix& hessian,
                                           const Matrix& jacobian,
                                           const Vector& p_u,
                                           const Vector& p_lambda) {
  Vector change = hessian * p_u;
  if (jacobian.rows() > 0) change.noalias() += jacobian.transpose() * p_lambda;
  return grad_lagrangian.dot(change);
}

/**
 * Merit parameter making D <= -rho mu ||C - s||_1:
 * mu = max(0, (grad gamma . p) / ((1 - rho) ||C - s||_1)).
 */
inline double compute_mu(double gamma_derivative, double feasibility_gap,
                         double rho) {
  if (!(feasibility_gap > 0.0)) {
    throw Error("compute_mu requires C - s != 0");
  }
  return std::max(0.0, gamma_derivative / ((1.0 - rho) * feasibility_gap));
}

// ---------------------------------------------------------------------------
// SQP step
// ---------------------------------------------------------------------------

struct SqpStep {
  Vector p_u;
  Vector p_lambda;
  Vector p_s;
  /// Slack refreshed at the iterate, min(0, C).
  Vector s;
  QPSolution qp;
  CondensedDerivatives derivatives;
  /// grad L at the iterate, h + G^T lambda.
  Vector grad_lagrangian;
  /// ||C - s||_1 with the refreshed slack.
  double feasibility_gap = 0.0;
  /// grad gamma . [p_u; p_lambda].
  double gamma_derivative = 0.0;
};

inline QPSubproblem build_subproblem(const CondensedDerivatives& d,
                                     double regularization) {
  QPSubproblem qp;
  qp.B = proj_psd(SymmetricMatrix::symmetric_part(d.L), regularization).entries();
  qp.h = d.h;
  qp.G = d.G;
  qp.c = d.constraints;
  return qp;
}

inline SqpStep sqp_step(const DynamicGame& game, const Vector& u,
                        const Vector& lambda, const SolverConfig& config) {
  SqpStep step;
  EvaluateOptions eval_options;
  eval_options.exact_hessian = config.exact_hessian;
  eval_options.fd_step = config.fd_step;
  step.derivatives = evaluate(game, u, lambda, eval_options);
  const auto& d = step.derivatives;

  step.qp = solve_qp(build_subproblem(d, config.hessian_regularization), config.qp);
  step.grad_lagrangian = d.h;
  if (d.G.rows() > 0) step.grad_lagrangian.noalias() += d.G.transpose() * lambda;
  step.s = refreshed_slack(d.constraints);
  step.feasibility_gap = (d.constraints - step.s).lpNorm<1>();
  if (step.qp.status == QPStatus::kInfeasible) return step;

  step.p_u = step.qp.p;
  step.p_lambda = step.qp.d - lambda;
  step.p_s = d.constraints - step.s;
  if (d.G.rows() > 0) step.p_s.noalias() += d.G * step.p_u;
  step.gamma_derivative = gamma_directional_derivative(
      step.grad_lagrangian, d.L, d.G, step.p_u, step.p_lambda);
  return step;
}

inline SqpStep sqp_step(const DynamicGame& game, const Iterate& it,
                        const SolverConfig& config) {
  return sqp_step(game, it.u, it.lambda, config);
}

/// D = grad gamma . p - mu ||C - s||_1 for a step computed at `it`.
inline double merit_directional_derivative(const SqpStep& step, double mu) {
  return step.gamma_derivative - mu * step.feasibility_gap;
}

inline double merit_directional_derivative(const DynamicGame& game,
                                           const Iterate& it, const Vector& p_u,
                                           const Vector& p_lambda, double mu,
                                           const EvaluateOptions& options = {}) {
  const CondensedDerivatives d = evaluate(game, it.u, it.lambda, options);
  Vector grad = d.h;
  if (d.G.rows() > 0) grad.noalias() += d.G.transpose() * it.lambda;
  const double gap = d.constraints.size() ? (d.constraints - it.s).lpNorm<1>() : 0.0;
  return gamma_directional_derivative(grad, d.L, d.G, p_u, p_lambda) - mu * gap;
}

inline double compute_mu(const DynamicGame& game, const Iterate& it,
                         const Vector& p_u, const Vector& p_lambda, double rho,
                         const EvaluateOptions& options = {}) {
  const CondensedDerivatives d = evaluate(game, it.u, it.lambda, options);
  Vector grad = d.h;
  if (d.G.rows() > 0) grad.noalias() += d.G.transpose() * it.lambda;
  const double gap = d.constraints.size() ? (d.constraints - it.s).lpNorm<1>() : 0.0;
  return compute_mu(gamma_directional_derivative(grad, d.L, d.G, p_u, p_lambda),
                    gap, rho);
}

// ---------------------------------------------------------------------------
// Line searches
// ---------------------------------------------------------------------------

struct LineSearchResult {
  bool accepted = false;
  Vector u;
  Vector lambda;
  double alpha = 0.0;
  int qp_solves = 0;
  int relaxed_steps = 0;
};

namespace detail {

inline double merit_at(const DynamicGame& game, const Vector& u,
                       const Vector& lambda, const Vector& s, double mu) {
  try {
    return merit_value(lagrangian_gradient(game, u, lambda), s, mu);
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Largest alpha in {1, tau, tau^2, ...} >= alpha_min with
// phi(base + alpha step) <= phi_ref + zeta alpha D. Returns 0 on failure.
inline double backtrack(const DynamicGame& game, const Vector& u,
                        const Vector& lambda, const Vector& s,
                        const Vector& p_u, const Vector& p_lambda,
                        const Vector& p_s, double mu, double phi_ref,
                        double derivative, const SolverConfig& config) {
  for (double alpha = 1.0; alpha >= config.alpha_min;
       alpha *= config.backtracking_tau) {
    const double phi = merit_at(game, u + alpha * p_u, lambda + alpha * p_lambda,
                                s + alpha * p_s, mu);
    if (phi <= phi_ref + config.sufficient_decrease * alpha * derivative) {
      return alpha;
    }
  }
  return 0.0;
}

}  // namespace detail

/// Plain monotone backtracking on the merit function.
inline LineSearchResult backtracking_line_search(const DynamicGame& game,
                                                 const Iterate& it,
                                                 const SqpStep& step, double mu,
                                                 const SolverConfig& config) {
  LineSearchResult out;
  const double phi = detail::merit_at(game, it.u, it.lambda, it.s, mu);
  const double derivative = merit_directional_derivative(step, mu);
  const double alpha =
      detail::backtrack(game, it.u, it.lambda, it.s, step.p_u, step.p_lambda,
                        step.p_s, mu, phi, derivative, config);
  if (alpha > 0.0) {
    out.accepted = true;
    out.alpha = alpha;
    out.u = it.u + alpha * step.p_u;
    out.lambda = it.lambda + alpha * step.p_lambda;
  }
  return out;
}

/**
 * Watchdog (non-monotone) line search.
 *
 * Takes up to P relaxed full steps, each followed by a fresh subproblem, and
 * accepts the first one satisfying phi_i <= phi + zeta D phi with respect to
 * the original iterate. Otherwise enforces decrease by backtracking on the
 * step computed at the last relaxed iterate and, failing that, by
 * backtracking from the original iterate. `mu` stays fixed throughout.
 */
inline LineSearchResult watchdog_line_search(const DynamicGame& game,
                                             const Iterate& it,
                                             const SqpStep& step, double mu,
                                             const SolverConfig& config) {
  LineSearchResult out;
  const double zeta = config.sufficient_decrease;
  const double phi = detail::merit_at(game, it.u, it.lambda, it.s, mu);
  const double derivative = merit_directional_derivative(step, mu);
  const double target = phi + zeta * derivative;

  Vector u_bar = it.u + step.p_u;
  Vector lambda_bar = it.lambda + step.p_lambda;
  Vector s_bar = it.s + step.p_s;
  double phi_bar = detail::merit_at(game, u_bar, lambda_bar, s_bar, mu);

  auto accept = [&](Vector u, Vector lambda, double alpha) {
    out.accepted = true;
    out.u = std::move(u);
    out.lambda = std::move(lambda);
    out.alpha = alpha;
    return out;
  };

  bool relaxed_ok = true;
  for (int i = 0; i < config.watchdog_steps; ++i) {
    if (phi_bar <= target) return accept(u_bar, lambda_bar, 1.0);
    SqpStep inner;
    try {
      inner = sqp_step(game, u_bar, lambda_bar, config);
    } catch (const Error&) {
      relaxed_ok = false;
      break;
    }
    ++out.qp_solves;
    if (inner.qp.status == QPStatus::kInfeasible) {
      relaxed_ok = false;
      break;
    }
    ++out.relaxed_steps;
    u_bar += inner.p_u;
    lambda_bar += inner.p_lambda;
    s_bar = inner.s + inner.p_s;
    phi_bar = detail::merit_at(game, u_bar, lambda_bar, s_bar, mu);
  }

  if (relaxed_ok) {
    if (phi_bar <= target) return accept(u_bar, lambda_bar, 1.0);
    try {
      const SqpStep last = sqp_step(game, u_bar, lambda_bar, config);
      ++out.qp_solves;
      if (last.qp.status != QPStatus::kInfeasible) {
        const double phi_last = detail::merit_at(game, u_bar, lambda_bar, last.s, mu);
        const double derivative_last = merit_directional_derivative(last, mu);
        const double alpha = detail::backtrack(
            game, u_bar, lambda_bar, last.s, last.p_u, last.p_lambda, last.p_s,
            mu, phi_last, derivative_last, config);
        if (alpha > 0.0) {
          Vector u_next = u_bar + alpha * last.p_u;
          Vector lambda_next = lambda_bar + alpha * last.p_lambda;
          const Vector s_next = last.s + alpha * last.p_s;
          if (detail::merit_at(game, u_next, lambda_next, s_next, mu) <= target) {
            return accept(std::move(u_next), std::move(lambda_next), alpha);
          }
        }
      }
    } catch (const Error&) {
    }
  }

  const double alpha =
      detail::backtrack(game, it.u, it.lambda, it.s, step.p_u, step.p_lambda,
                        step.p_s, mu, phi, derivative, config);
  out.relaxed_steps = 0;
  if (alpha > 0.0) {
    return accept(it.u + alpha * step.p_u, it.lambda + alpha * step.p_lambda,
                  alpha);
  }
  return out;
}

// ---------------------------------------------------------------------------
// DG-SQP
// ---------------------------------------------------------------------------

/// Least-squares multipliers of h + G^T lambda = 0, clipped at zero.
inline Vector initial_multipliers(const Vector& h, const Matrix& G,
                                  double regularization) {
  if (G.rows() == 0) return Vector(0);
  Matrix normal = G * G.transpose();
  normal.diagonal().array() += regularization;
  const Vector lambda = -solve_linear(normal, G * h);
  return lambda.cwiseMax(0.0);
}

struct KktMeasures {
  double stationarity = 0.0;
  double max_violation = 0.0;
  double complementarity = 0.0;
};

inline KktMeasures kkt_measures(const FirstOrderValues& values,
                                const Vector& lambda) {
  KktMeasures m;
  m.stationarity = values.stationarity.size()
                       ? values.stationarity.cwiseAbs().maxCoeff()
                       : 0.0;
  if (values.constraints.size() > 0) {
    m.max_violation = std::max(0.0, values.constraints.maxCoeff());
    m.complementarity = std::abs(lambda.dot(values.constraints));
  }
  return m;
}

/// Warm start from a primal-dual pair; lambda is clipped at zero.
inline SolveResult solve(const DynamicGame& game, const Vector& u0, const Vector& lambda0,
                         const SolverConfig& config = {}) {
  config.validate();
  if (u0.size() != game.num_variables() || lambda0.size() != game.num_constraints()) {
    throw Error("warm start does not match the game dimensions");
  }
  SolveResult result;
  Iterate it;
  it.u = u0;
  it.lambda = lambda0.cwiseMax(0.0);

  int stall = 0;
  for (int q = 0;; ++q) {
    FirstOrderValues values;
    try {
      values = lagrangian_gradient(game, it.u, it.lambda);
    } catch (const RolloutDivergenceError&) {
      result.status = SolveStatus::kDiverged;
      break;
    } catch (const DynamicsSingularityError&) {
      result.status = SolveStatus::kDiverged;
      break;
    }
    it.s = refreshed_slack(values.constraints);
    const KktMeasures kkt = kkt_measures(values, it.lambda);
    result.stationarity = kkt.stationarity;
    result.max_violation = kkt.max_violation;
    result.complementarity = kkt.complementarity;
    result.iterations = q;
    if (config.record_iterates) result.iterates.push_back(it);

    if (kkt.stationarity <= config.eps_stationarity &&
        kkt.max_violation <= config.eps_feasibility &&
        kkt.complementarity <= config.eps_complementarity) {
      result.status = SolveStatus::kConvergedKkt;
      break;
    }
    if (!(kkt.stationarity <= config.divergence_threshold)) {
      result.status = SolveStatus::kDiverged;
      break;
    }
    if (stall >= config.relative_patience) {
      result.status = SolveStatus::kConvergedRelative;
      break;
    }
    if (q >= config.max_iterations) {
      result.status = SolveStatus::kMaxIterations;
      break;
    }

    IterationRecord rec;
    rec.iteration = q;
    rec.stationarity = kkt.stationarity;
    rec.max_violation = kkt.max_violation;
    rec.complementarity = kkt.complementarity;

    SqpStep step;
    try {
      step = sqp_step(game, it, config);
    } catch (const RolloutDivergenceError&) {
      result.status = SolveStatus::kDiverged;
      break;
    } catch (const DynamicsSingularityError&) {
      result.status = SolveStatus::kDiverged;
      break;
    }
    ++result.qp_solves;
    rec.qp_solves = 1;
    if (step.qp.status == QPStatus::kInfeasible) {
      result.trace.push_back(rec);
      result.status = SolveStatus::kQpInfeasible;
      break;
    }

    double mu = 0.0;
    if (config.merit == MeritKind::kFull && step.feasibility_gap > 0.0) {
      mu = compute_mu(step.gamma_derivative, step.feasibility_gap, config.merit_rho);
    }
    rec.mu = mu;
    rec.feasibility_gap = step.feasibility_gap;
    rec.directional_derivative = merit_directional_derivative(step, mu);
    rec.merit = merit_value(values, it.s, mu);
    rec.step_norm = step.p_u.size() ? step.p_u.cwiseAbs().maxCoeff() : 0.0;

    const LineSearchResult ls =
        config.line_search == LineSearchKind::kWatchdog
            ? watchdog_line_search(game, it, step, mu, config)
            : backtracking_line_search(game, it, step, mu, config);
    result.qp_solves += ls.qp_solves;
    rec.qp_solves += ls.qp_solves;
    rec.relaxed_steps = ls.relaxed_steps;
    rec.alpha = ls.alpha;
    result.trace.push_back(rec);
    if (!ls.accepted) {
      result.status = SolveStatus::kLineSearchFailure;
      break;
    }

    const double du = (ls.u - it.u).cwiseAbs().maxCoeff();
    const double dl =
        ls.lambda.size() ? (ls.lambda - it.lambda).cwiseAbs().maxCoeff() : 0.0;
    const double u_scale = 1.0 + it.u.cwiseAbs().maxCoeff();
    const double l_scale =
        1.0 + (it.lambda.size() ? it.lambda.cwiseAbs().maxCoeff() : 0.0);
    if (du <= config.relative_tol * u_scale && dl <= config.relative_tol * l_scale) {
      ++stall;
    } else {
      stall = 0;
    }
    it.u = ls.u;
    it.lambda = ls.lambda.cwiseMax(0.0);
  }
  result.final = it;
  return result;
}

inline SolveResult solve(const DynamicGame& game, const DecisionVector& initial_guess,
                         const SolverConfig& config = {}) {
  config.validate();
  if (initial_guess.flat().size() != game.num_variables()) {
    throw Error("initial guess does not match the game dimensions");
  }
  const Vector& u0 = initial_guess.flat();
  EvaluateOptions first_order;
  first_order.hessian = false;
  const CondensedDerivatives d0 =
      evaluate(game, u0, Vector::Zero(game.num_constraints()), first_order);
  return solve(game, u0, initial_multipliers(d0.h, d0.G, config.dual_init_regularization),
               config);
}

// ---------------------------------------------------------------------------
// A-posteriori regularity checks
// ---------------------------------------------------------------------------

struct Assumption2Report {
  bool strict_complementarity = true;
  bool licq = true;
  std::vector<bool> reduced_hessian_pd;

  bool all() const {
    return strict_complementarity && licq &&
           std::all_of(reduced_hessian_pd.begin(), reduced_hessian_pd.end(),
                       [](bool b) { return b; });
  }
};

inline Assumption2Report check_assumption2(const DynamicGame& game,
                                           const Iterate& final,
                                           const EvaluateOptions& options = {}) {
  constexpr double kActiveTol = 1e-6;
  constexpr double kRankTol = 1e-8;
  constexpr double kCurvatureTol = 1e-8;

  Assumption2Report report;
  const CondensedDerivatives d = evaluate(game, final.u, final.lambda, options);
  std::vector<int> active;
  for (int j = 0; j < d.constraints.size(); ++j) {
    const bool positive_dual = final.lambda(j) > kActiveTol;
    const bool strictly_inactive = d.constraints(j) < -kActiveTol;
    if (positive_dual == strictly_inactive) report.strict_complementarity = false;
    if (std::abs(d.constraints(j)) <= kActiveTol) active.push_back(j);
  }

  const int nu = game.num_variables();
  Matrix active_jac(static_cast<int>(active.size()), nu);
  for (std::size_t a = 0; a < active.size(); ++a) {
    active_jac.row(static_cast<int>(a)) = d.G.row(active[a]);
  }
  if (!active.empty()) {
    Eigen::ColPivHouseholderQR<Matrix> qr(active_jac.transpose());
    qr.setThreshold(kRankTol);
    report.licq = qr.rank() == static_cast<int>(active.size());
  }

  for (int i = 0; i < game.num_agents(); ++i) {
    const int off = game.agent_offset(i);
    const int size = game.agent_size(i);
    const Matrix hess = d.L.block(off, off, size, size);
    Matrix basis = Matrix::Identity(size, size);
    if (!active.empty()) {
      const Matrix own = active_jac.middleCols(off, size);
      Eigen::ColPivHouseholderQR<Matrix> qr(own.transpose());
      qr.setThreshold(kRankTol);
      const int rank = static_cast<int>(qr.rank());
      const Matrix q = qr.householderQ() * Matrix::Identity(size, size);
      basis = q.rightCols(size - rank);
    }
    if (basis.cols() == 0) {
      report.reduced_hessian_pd.push_back(true);
      continue;
    }
    const Matrix reduced = basis.transpose() * hess * basis;
    const EigenDecomposition eig = sym_eig(SymmetricMatrix::symmetric_part(reduced));
    report.reduced_hessian_pd.push_back(eig.values.minCoeff() > kCurvatureTol);
  }
  return report;
}

inline Assumption2Report check_assumption2(const DynamicGame& game,
                                           const SolveResult& result,
                                           const EvaluateOptions& options = {}) {
  return check_assumption2(game, result.final, options);
}

}  // namespace dgsqp
