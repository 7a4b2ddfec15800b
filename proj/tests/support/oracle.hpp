#pragma once

// Ground-truth generators for tests. Nothing here calls into the solver,
// condensation or QP code under test; the LQ oracle condenses the dynamics on
// its own and solves the stacked KKT system with a direct factorization.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "dgsqp/game.hpp"
#include "dgsqp/qp.hpp"

namespace dgsqp::oracle {

class DegenerateGameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rows Ex x_k + Eu u_k - f_k, one set per step k = first_step .. N-1.
struct StageLinearConstraint {
  int first_step = 0;
  std::vector<Matrix> Ex;  // indexed by k - first_step
  std::vector<Matrix> Eu;
  std::vector<Vector> f;
};

/// Rows Ex x_N - f.
struct TerminalLinearConstraint {
  Matrix Ex;
  Vector f;
};

/**
 * x_{k+1} = A_k x_k + B_k u_k with joint input u_k (agents stacked).
 * Agent i pays sum_k [1/2 x_k'Q x_k + q'x_k + 1/2 u_k'R u_k + r'u_k] for
 * k = 0..N-1 plus 1/2 x_N'Qf x_N + qf'x_N. R is over the joint input so
 * agents may be coupled through inputs as well as states.
 */
struct LQGame {
  int horizon = 0;
  std::vector<int> input_dims;
  std::vector<Matrix> A, B;
  Vector x0;
  std::vector<Matrix> Q, R, Qf;
  std::vector<Vector> q, r, qf;
  std::vector<StageLinearConstraint> stage_constraints;
  std::vector<TerminalLinearConstraint> terminal_constraints;

  int num_agents() const { return static_cast<int>(input_dims.size()); }
  int state_dim() const { return static_cast<int>(x0.size()); }
  int input_dim() const {
    int m = 0;
    for (int d : input_dims) m += d;
    return m;
  }
};

struct LQSolution {
  Vector u;       // agent-major, time-major
  Vector lambda;  // constraint rows: per step in block order, then terminal
  double residual = 0.0;
};

namespace detail {

// Column of component c of joint input u_k in the agent-major flattening.
inline int flat_column(const LQGame& g, int k, int c) {
  int off = 0, joint = 0;
  for (int i = 0; i < g.num_agents(); ++i) {
    const int mi = g.input_dims[i];
    if (c < joint + mi) return off + k * mi + (c - joint);
    off += g.horizon * mi;
    joint += mi;
  }
  throw std::logic_error("flat_column out of range");
}

// Agent owning flattened column `col`.
inline int owner(const LQGame& g, int col) {
  int off = 0;
  for (int i = 0; i < g.num_agents(); ++i) {
    off += g.horizon * g.input_dims[i];
    if (col < off) return i;
  }
  throw std::logic_error("owner out of range");
}

// x_k = Phi[k] x0 + S[k] u, with S over the flattened input.
struct Condensed {
  std::vector<Matrix> Phi;
  std::vector<Matrix> S;
  std::vector<Matrix> Sel;  // u_k = Sel[k] u
};

inline Condensed condense(const LQGame& g) {
  const int n = g.state_dim(), m = g.input_dim(), N = g.horizon;
  const int nu = N * m;
  Condensed c;
  for (int k = 0; k < N; ++k) {
    Matrix sel = Matrix::Zero(m, nu);
    for (int j = 0; j < m; ++j) sel(j, flat_column(g, k, j)) = 1.0;
    c.Sel.push_back(sel);
  }
  c.Phi.push_back(Matrix::Identity(n, n));
  c.S.push_back(Matrix::Zero(n, nu));
  for (int k = 0; k < N; ++k) {
    c.Phi.push_back(g.A[k] * c.Phi[k]);
    c.S.push_back(g.A[k] * c.S[k] + g.B[k] * c.Sel[k]);
  }
  return c;
}

}  // namespace detail

/// Linear constraint rows G u + c in the game's row order.
inline void lq_constraints(const LQGame& g, Matrix& G, Vector& c) {
  const auto cd = detail::condense(g);
  const int nu = g.horizon * g.input_dim();
  std::vector<Matrix> rows_G;
  std::vector<Vector> rows_c;
  for (int k = 0; k < g.horizon; ++k) {
    for (const auto& b : g.stage_constraints) {
      if (k < b.first_step) continue;
      const int j = k - b.first_step;
      rows_G.push_back(b.Ex[j] * cd.S[k] + b.Eu[j] * cd.Sel[k]);
      rows_c.push_back(b.Ex[j] * cd.Phi[k] * g.x0 - b.f[j]);
    }
  }
  for (const auto& t : g.terminal_constraints) {
    rows_G.push_back(t.Ex * cd.S[g.horizon]);
    rows_c.push_back(t.Ex * cd.Phi[g.horizon] * g.x0 - t.f);
  }
  int total = 0;
  for (const auto& r : rows_G) total += static_cast<int>(r.rows());
  G = Matrix::Zero(total, nu);
  c = Vector::Zero(total);
  int row = 0;
  for (std::size_t b = 0; b < rows_G.size(); ++b) {
    G.middleRows(row, rows_G[b].rows()) = rows_G[b];
    c.segment(row, rows_c[b].size()) = rows_c[b];
    row += static_cast<int>(rows_G[b].rows());
  }
}

/// Agent i's cost as 1/2 u'H u + g'u + const over the flattened input.
inline void lq_cost(const LQGame& g, int agent, Matrix& H, Vector& grad0) {
  const auto cd = detail::condense(g);
  const int nu = g.horizon * g.input_dim();
  H = Matrix::Zero(nu, nu);
  grad0 = Vector::Zero(nu);
  for (int k = 0; k < g.horizon; ++k) {
    const Vector xfree = cd.Phi[k] * g.x0;
    H += cd.S[k].transpose() * g.Q[agent] * cd.S[k];
    grad0 += cd.S[k].transpose() * (g.Q[agent] * xfree + g.q[agent]);
    H += cd.Sel[k].transpose() * g.R[agent] * cd.Sel[k];
    grad0 += cd.Sel[k].transpose() * g.r[agent];
  }
  const int N = g.horizon;
  H += cd.S[N].transpose() * g.Qf[agent] * cd.S[N];
  grad0 += cd.S[N].transpose() * (g.Qf[agent] * cd.Phi[N] * g.x0 + g.qf[agent]);
}

/**
 * Generalized Nash equilibrium of an LQ game whose constraints all hold with
 * equality: one Newton step of the joint KKT system from zero, which is exact
 * because the system is linear.
 */
inline LQSolution lq_gne(const LQGame& g) {
  const int nu = g.horizon * g.input_dim();
  Matrix G;
  Vector c;
  lq_constraints(g, G, c);
  const int nc = static_cast<int>(G.rows());

  Matrix M(nu, nu);
  Vector rhs_u(nu);
  for (int i = 0; i < g.num_agents(); ++i) {
    Matrix H;
    Vector g0;
    lq_cost(g, i, H, g0);
    for (int col = 0; col < nu; ++col) {
      if (detail::owner(g, col) != i) continue;
      M.row(col) = H.row(col);
      rhs_u(col) = -g0(col);
    }
  }
  Matrix K = Matrix::Zero(nu + nc, nu + nc);
  K.topLeftCorner(nu, nu) = M;
  if (nc > 0) {
    K.topRightCorner(nu, nc) = G.transpose();
    K.bottomLeftCorner(nc, nu) = G;
  }
  Vector rhs(nu + nc);
  rhs << rhs_u, -c;
  const Eigen::FullPivLU<Matrix> lu(K);
  if (lu.rank() < nu + nc) throw DegenerateGameError("LQ KKT matrix is singular");
  const Vector z = lu.solve(rhs);
  LQSolution sol;
  sol.u = z.head(nu);
  sol.lambda = z.tail(nc);
  sol.residual = (K * z - rhs).cwiseAbs().maxCoeff();
  return sol;
}

/// Wraps an LQ game as a DynamicGame; linear rows become inequalities <= 0.
inline DynamicGame to_dynamic_game(const LQGame& g) {
  GameDefinition def;
  def.horizon = g.horizon;
  def.input_dims = g.input_dims;
  const int agents = g.num_agents();
  // The whole state is attributed to agent 0; only the total matters.
  def.state_dims.assign(agents, 0);
  def.state_dims[0] = g.state_dim();
  def.initial_state = g.x0;
  def.dynamics = [g](int k, const Vector& x, const Vector& u, bool derivatives) {
    DynamicsEval e;
    e.next = g.A[k] * x + g.B[k] * u;
    if (derivatives) {
      e.dx = g.A[k];
      e.du = g.B[k];
    }
    return e;
  };
  for (int i = 0; i < agents; ++i) {
    def.stage_costs.push_back([g, i](int, const Vector& x, const Vector& u,
                                     const Vector&, bool derivatives) {
      StageScalar l;
      l.value = 0.5 * x.dot(g.Q[i] * x) + g.q[i].dot(x) + 0.5 * u.dot(g.R[i] * u) +
                g.r[i].dot(u);
      if (derivatives) {
        l.dx = g.Q[i] * x + g.q[i];
        l.du = g.R[i] * u + g.r[i];
        l.du_prev = Vector::Zero(u.size());
      }
      return l;
    });
    def.terminal_costs.push_back([g, i](const Vector& x, bool derivatives) {
      TerminalScalar l;
      l.value = 0.5 * x.dot(g.Qf[i] * x) + g.qf[i].dot(x);
      if (derivatives) l.dx = g.Qf[i] * x + g.qf[i];
      return l;
    });
  }
  for (std::size_t b = 0; b < g.stage_constraints.size(); ++b) {
    const auto blk = g.stage_constraints[b];
    StageConstraintBlock sb;
    sb.name = "linear_" + std::to_string(b);
    sb.count = static_cast<int>(blk.f.front().size());
    sb.first_step = blk.first_step;
    sb.eval = [blk](int k, const Vector& x, const Vector& u, const Vector& u_prev,
                    bool derivatives) {
      const int j = k - blk.first_step;
      StageVector c;
      c.values = blk.Ex[j] * x + blk.Eu[j] * u - blk.f[j];
      if (derivatives) {
        c.dx = blk.Ex[j];
        c.du = blk.Eu[j];
        c.du_prev = Matrix::Zero(c.values.size(), u_prev.size());
      }
      return c;
    };
    def.stage_constraints.push_back(sb);
  }
  for (std::size_t b = 0; b < g.terminal_constraints.size(); ++b) {
    const auto blk = g.terminal_constraints[b];
    TerminalConstraintBlock tb;
    tb.name = "terminal_linear_" + std::to_string(b);
    tb.count = static_cast<int>(blk.f.size());
    tb.eval = [blk](const Vector& x, bool derivatives) {
      TerminalVector c;
      c.values = blk.Ex * x - blk.f;
      if (derivatives) c.dx = blk.Ex;
      return c;
    };
    def.terminal_constraints.push_back(tb);
  }
  return DynamicGame(std::move(def));
}

// ---------------------------------------------------------------------------
// Random LQ games
// ---------------------------------------------------------------------------

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

inline Matrix random_spd(std::mt19937_64& rng, int n, double floor) {
  const Matrix a = random_matrix(rng, n, n, 1.0 / std::sqrt(n));
  return a * a.transpose() + floor * Matrix::Identity(n, n);
}

/**
 * Two coupled agents, each owning two of the four states. Coupling enters
 * through weak cross terms in the dynamics, a relative-state penalty shared by
 * both agents, small asymmetric perturbations of the state costs and cross
 * terms in the input costs. `terminal_rows` adds linear terminal constraints
 * whose signs are chosen so that they are active at the equilibrium with
 * positive multipliers.
 */
inline LQGame random_coupled_lq(std::mt19937_64& rng, int horizon = 5,
                                int inputs_per_agent = 2, int terminal_rows = 0) {
  LQGame g;
  g.horizon = horizon;
  g.input_dims = {inputs_per_agent, inputs_per_agent};
  const int n = 4, m = 2 * inputs_per_agent;
  const int p = inputs_per_agent;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < horizon; ++k) {
    Matrix A = Matrix::Identity(n, n) + random_matrix(rng, n, n, 0.05);
    A(0, 1) += 0.2;
    A(2, 3) += 0.2;
    Matrix B = random_matrix(rng, n, m, 0.05);
    for (int i = 0; i < 2; ++i) B.block(2 * i, i * p, 2, p) += random_matrix(rng, 2, p, 0.5);
    g.A.push_back(A);
    g.B.push_back(B);
  }
  g.x0 = random_matrix(rng, n, 1).col(0);
  Matrix rel = Matrix::Zero(2, n);
  rel << 1, 0, -1, 0, 0, 1, 0, -1;
  const double shared = 0.1 + 0.4 * unit(rng);
  const Matrix coupling = shared * rel.transpose() * rel;
  for (int i = 0; i < 2; ++i) {
    auto state_cost = [&](double floor) {
      Matrix Q = coupling + 0.05 * random_spd(rng, n, 0.0);
      Q.block(2 * i, 2 * i, 2, 2) += random_spd(rng, 2, floor);
      return Q;
    };
    g.Q.push_back(state_cost(0.1));
    g.Qf.push_back(state_cost(0.5));
    Matrix R = random_matrix(rng, m, m, 0.1);
    R = 0.5 * (R + R.transpose());
    R.block(i * p, i * p, p, p) += random_spd(rng, p, 1.0);
    g.R.push_back(R);
    g.q.push_back(random_matrix(rng, n, 1, 0.5).col(0));
    g.qf.push_back(random_matrix(rng, n, 1, 0.5).col(0));
    g.r.push_back(random_matrix(rng, m, 1, 0.5).col(0));
  }
  if (terminal_rows > 0) {
    TerminalLinearConstraint t;
    t.Ex = random_matrix(rng, terminal_rows, n);
    t.f = random_matrix(rng, terminal_rows, 1).col(0);
    g.terminal_constraints.push_back(t);
    const LQSolution sol = lq_gne(g);
    for (int j = 0; j < terminal_rows; ++j) {
      if (sol.lambda(j) < 0) {
        g.terminal_constraints[0].Ex.row(j) *= -1.0;
        g.terminal_constraints[0].f(j) *= -1.0;
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double step) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + step;
    xm(i) = x(i) - step;
    g(i) = (f(xp) - f(xm)) / (2.0 * step);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                          double step) {
  Matrix J;
  Vector xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + step;
    xm(i) = x(i) - step;
    const Vector col = (f(xp) - f(xm)) / (2.0 * step);
    if (i == 0) J.resize(col.size(), x.size());
    J.col(i) = col;
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return J;
}

// ---------------------------------------------------------------------------
// QP active-set enumeration
// ---------------------------------------------------------------------------

inline QPSolution qp_enumerate(const QPSubproblem& qp, double tol = 1e-9) {
  const int n = static_cast<int>(qp.h.size());
  const int m = static_cast<int>(qp.c.size());
  if (m > 20) throw std::invalid_argument("qp_enumerate: at most 20 constraints");
  QPSolution best;
  best.status = QPStatus::kInfeasible;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int j = 0; j < m; ++j)
      if (mask & (1u << j)) act.push_back(j);
    const int na = static_cast<int>(act.size());
    if (na > n) continue;
    Matrix K = Matrix::Zero(n + na, n + na);
    Vector rhs(n + na);
    K.topLeftCorner(n, n) = qp.B;
    rhs.head(n) = -qp.h;
    for (int a = 0; a < na; ++a) {
      K.block(n + a, 0, 1, n) = qp.G.row(act[a]);
      K.block(0, n + a, n, 1) = qp.G.row(act[a]).transpose();
      rhs(n + a) = -qp.c(act[a]);
    }
    const Eigen::ColPivHouseholderQR<Matrix> qr(K);
    if (qr.rank() < n + na) continue;
    const Vector z = qr.solve(rhs);
    const Vector p = z.head(n);
    Vector d = Vector::Zero(m);
    for (int a = 0; a < na; ++a) d(act[a]) = z(n + a);
    if (m > 0 && (qp.c + qp.G * p).maxCoeff() > tol) continue;
    if (m > 0 && d.minCoeff() < -tol) continue;
    best.p = p;
    best.d = d;
    best.status = QPStatus::kOptimal;
    return best;
  }
  return best;
}

}  // namespace dgsqp::oracle
