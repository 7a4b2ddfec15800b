#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dgsqp/errors.hpp"
#include "dgsqp/numerics.hpp"

namespace dgsqp {

// ---------------------------------------------------------------------------
// Model callbacks
//
// Every stage-level callback receives the step index k, the joint state x_k,
// the joint input u_k (all agents stacked in agent order) and the joint input
// of the previous step u_{k-1}. At k = 0 the previous input is the game's
// `previous_input`. When `derivatives` is false the callee may leave the
// derivative members empty.
// ---------------------------------------------------------------------------

struct DynamicsEval {
  Vector next;
  Matrix dx;  // A_k, n x n
  Matrix du;  // B_k, n x m
};

struct StageScalar {
  double value = 0.0;
  Vector dx;
  Vector du;
  Vector du_prev;
};

struct StageVector {
  Vector values;
  Matrix dx;
  Matrix du;
  Matrix du_prev;
};

struct TerminalScalar {
  double value = 0.0;
  Vector dx;
};

struct TerminalVector {
  Vector values;
  Matrix dx;
};

using DynamicsFn = std::function<DynamicsEval(int k, const Vector& x,
                                              const Vector& u, bool derivatives)>;
using StageCostFn =
    std::function<StageScalar(int k, const Vector& x, const Vector& u,
                              const Vector& u_prev, bool derivatives)>;
using TerminalCostFn =
    std::function<TerminalScalar(const Vector& x, bool derivatives)>;
using StageConstraintFn =
    std::function<StageVector(int k, const Vector& x, const Vector& u,
                              const Vector& u_prev, bool derivatives)>;
using TerminalConstraintFn =
    std::function<TerminalVector(const Vector& x, bool derivatives)>;

/// A block of `count` scalar constraints evaluated at steps first_step..N-1.
struct StageConstraintBlock {
  std::string name;
  int count = 0;
  int first_step = 0;
  StageConstraintFn eval;
};

struct TerminalConstraintBlock {
  std::string name;
  int count = 0;
  TerminalConstraintFn eval;
};

/// Everything needed to describe a game. Filled by scenario builders and
/// validated by the DynamicGame constructor.
struct GameDefinition {
  int horizon = 0;
  std::vector<int> state_dims;
  std::vector<int> input_dims;
  DynamicsFn dynamics;
  /// stage_costs[i] and terminal_costs[i] belong to agent i.
  std::vector<StageCostFn> stage_costs;
  std::vector<TerminalCostFn> terminal_costs;
  std::vector<StageConstraintBlock> stage_constraints;
  std::vector<TerminalConstraintBlock> terminal_constraints;
  Vector initial_state;
  /// Joint input u_{-1}; zero when left empty.
  Vector previous_input;
  /// Optional exact stacked Hessian L(u, lambda) over the flattened input.
  std::function<Matrix(const Vector& u, const Vector& lambda)>
      lagrangian_hessian;
};

/**
 * The dynamic game (N, X, U, f, {J^i}, C), immutable after construction.
 *
 * Flattened inputs are agent-major then time-major:
 * u = [u^1_0 .. u^1_{N-1}, u^2_0 .. u^2_{N-1}, ...].
 * Constraint rows are unrolled step by step: for k = 0..N-1 every stage block
 * active at k in declaration order, then every terminal block.
 */
class DynamicGame {
 public:
  explicit DynamicGame(GameDefinition def) : def_(std::move(def)) {
    const int agents = static_cast<int>(def_.input_dims.size());
    if (def_.horizon < 1) throw ConfigError("game horizon must be >= 1");
    if (agents < 1) throw ConfigError("game needs at least one agent");
    if (static_cast<int>(def_.state_dims.size()) != agents) {
      throw ConfigError("state_dims and input_dims disagree on agent count");
    }
    if (static_cast<int>(def_.stage_costs.size()) != agents ||
        static_cast<int>(def_.terminal_costs.size()) != agents) {
      throw ConfigError("one stage and one terminal cost required per agent");
    }
    if (!def_.dynamics) throw ConfigError("game dynamics not set");
    state_dim_ = std::accumulate(def_.state_dims.begin(), def_.state_dims.end(), 0);
    input_dim_ = std::accumulate(def_.input_dims.begin(), def_.input_dims.end(), 0);
    if (def_.initial_state.size() != state_dim_) {
      throw ConfigError("initial state has wrong dimension");
    }
    if (def_.previous_input.size() == 0) {
      def_.previous_input = Vector::Zero(input_dim_);
    } else if (def_.previous_input.size() != input_dim_) {
      throw ConfigError("previous input has wrong dimension");
    }

    agent_offset_.resize(agents);
    joint_offset_.resize(agents);
    int flat = 0, joint = 0;
    for (int i = 0; i < agents; ++i) {
      agent_offset_[i] = flat;
      joint_offset_[i] = joint;
      flat += def_.horizon * def_.input_dims[i];
      joint += def_.input_dims[i];
    }

    stage_row_offset_.assign(def_.horizon, 0);
    int rows = 0;
    for (int k = 0; k < def_.horizon; ++k) {
      stage_row_offset_[k] = rows;
      for (const auto& block : def_.stage_constraints) {
        if (block.count < 0) throw ConfigError("negative constraint count");
        if (k >= block.first_step) rows += block.count;
      }
    }
    terminal_row_offset_ = rows;
    for (const auto& block : def_.terminal_constraints) rows += block.count;
    num_constraints_ = rows;
  }

  int num_agents() const { return static_cast<int>(def_.input_dims.size()); }
  int horizon() const { return def_.horizon; }
  int state_dim() const { return state_dim_; }
  /// Joint input dimension m.
  int input_dim() const { return input_dim_; }
  int input_dim(int agent) const { return def_.input_dims[agent]; }
  int state_dim(int agent) const { return def_.state_dims[agent]; }
  /// Length of the flattened decision vector, N * m.
  int num_variables() const { return def_.horizon * input_dim_; }
  int num_constraints() const { return num_constraints_; }

  /// First flattened index belonging to `agent`.
  int agent_offset(int agent) const { return agent_offset_[agent]; }
  int agent_size(int agent) const { return def_.horizon * def_.input_dims[agent]; }
  /// Offset of `agent` inside the joint input u_k.
  int joint_offset(int agent) const { return joint_offset_[agent]; }
  /// First constraint row contributed at stage k.
  int stage_row_offset(int k) const { return stage_row_offset_[k]; }
  int terminal_row_offset() const { return terminal_row_offset_; }

  const Vector& initial_state() const { return def_.initial_state; }
  const Vector& previous_input() const { return def_.previous_input; }
  const GameDefinition& definition() const { return def_; }
  bool has_exact_hessian() const {
    return static_cast<bool>(def_.lagrangian_hessian);
  }

  /// Extracts the joint input u_k from a flattened decision vector.
  Vector joint_input(const Vector& flat, int k) const {
    Vector out(input_dim_);
    for (int i = 0; i < num_agents(); ++i) {
      const int mi = def_.input_dims[i];
      out.segment(joint_offset_[i], mi) =
          flat.segment(agent_offset_[i] + k * mi, mi);
    }
    return out;
  }

  /// Flattened column index of component `c` of the joint input at step k.
  int flat_index(int k, int joint_component) const {
    int agent = num_agents() - 1;
    while (joint_component < joint_offset_[agent]) --agent;
    const int mi = def_.input_dims[agent];
    return agent_offset_[agent] + k * mi + (joint_component - joint_offset_[agent]);
  }

 private:
  GameDefinition def_;
  int state_dim_ = 0;
  int input_dim_ = 0;
  int num_constraints_ = 0;
  std::vector<int> agent_offset_;
  std::vector<int> joint_offset_;
  std::vector<int> stage_row_offset_;
  int terminal_row_offset_ = 0;
};

/**
 * Open-loop input sequences of all agents with a lossless flattened view.
 */
class DecisionVector {
 public:
  DecisionVector() = default;
  DecisionVector(int horizon, std::vector<int> input_dims)
      : horizon_(horizon), input_dims_(std::move(input_dims)) {
    int total = 0;
    for (int mi : input_dims_) total += mi;
    flat_ = Vector::Zero(horizon_ * total);
  }
  DecisionVector(int horizon, std::vector<int> input_dims, Vector flat)
      : DecisionVector(horizon, std::move(input_dims)) {
    if (flat.size() != flat_.size()) {
      throw Error("DecisionVector: flattened length mismatch");
    }
    flat_ = std::move(flat);
  }

  static DecisionVector zeros(const DynamicGame& game) {
    std::vector<int> dims(game.num_agents());
    for (int i = 0; i < game.num_agents(); ++i) dims[i] = game.input_dim(i);
    return DecisionVector(game.horizon(), dims);
  }

  /// Builds from per-agent sequences: inputs[i][k] is agent i's input at k.
  static DecisionVector from_structured(
      const std::vector<std::vector<Vector>>& inputs) {
    if (inputs.empty()) throw Error("DecisionVector: no agents");
    const int horizon = static_cast<int>(inputs.front().size());
    std::vector<int> dims;
    for (const auto& seq : inputs) {
      if (static_cast<int>(seq.size()) != horizon) {
        throw Error("DecisionVector: agents disagree on horizon");
      }
      dims.push_back(horizon > 0 ? static_cast<int>(seq.front().size()) : 0);
    }
    DecisionVector out(horizon, dims);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      for (int k = 0; k < horizon; ++k) {
        if (inputs[i][k].size() != dims[i]) {
          throw Error("DecisionVector: inconsistent input dimension");
        }
        out.input(static_cast<int>(i), k) = inputs[i][k];
      }
    }
    return out;
  }

  std::vector<std::vector<Vector>> to_structured() const {
    std::vector<std::vector<Vector>> out(input_dims_.size());
    for (std::size_t i = 0; i < input_dims_.size(); ++i) {
      for (int k = 0; k < horizon_; ++k) {
        out[i].push_back(input(static_cast<int>(i), k));
      }
    }
    return out;
  }

  int horizon() const { return horizon_; }
  int num_agents() const { return static_cast<int>(input_dims_.size()); }
  const std::vector<int>& input_dims() const { return input_dims_; }
  const Vector& flat() const { return flat_; }
  Vector& flat() { return flat_; }

  Eigen::VectorBlock<Vector> input(int agent, int k) {
    return flat_.segment(offset(agent) + k * input_dims_[agent],
                         input_dims_[agent]);
  }
  Eigen::VectorBlock<const Vector> input(int agent, int k) const {
    return flat_.segment(offset(agent) + k * input_dims_[agent],
                         input_dims_[agent]);
  }

 private:
  int offset(int agent) const {
    int off = 0;
    for (int j = 0; j < agent; ++j) off += horizon_ * input_dims_[j];
    return off;
  }

  int horizon_ = 0;
  std::vector<int> input_dims_;
  Vector flat_;
};

/// States x_0..x_N plus the dynamics Jacobians A_k, B_k when requested.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<Matrix> state_jacobians;
  std::vector<Matrix> input_jacobians;
};

namespace detail {

inline void check_dims(const DynamicGame& game, const Vector& u) {
  if (u.size() != game.num_variables()) {
    throw Error("decision vector length " + std::to_string(u.size()) +
                " does not match game (" + std::to_string(game.num_variables()) +
                ")");
  }
}

inline Vector previous_joint_input(const DynamicGame& game, const Vector& u,
                                   int k) {
  return k == 0 ? game.previous_input() : game.joint_input(u, k - 1);
}

}  // namespace detail

inline Trajectory rollout(const DynamicGame& game, const Vector& u,
                          bool with_jacobians = false) {
  detail::check_dims(game, u);
  const auto& f = game.definition().dynamics;
  Trajectory traj;
  traj.states.reserve(game.horizon() + 1);
  traj.states.push_back(game.initial_state());
  for (int k = 0; k < game.horizon(); ++k) {
    DynamicsEval step =
        f(k, traj.states.back(), game.joint_input(u, k), with_jacobians);
    if (step.next.size() != game.state_dim()) {
      throw Error("dynamics returned a state of wrong dimension");
    }
    if (!step.next.allFinite()) {
      throw RolloutDivergenceError(
          k + 1, "rollout diverged: non-finite state at step " +
                     std::to_string(k + 1));
    }
    traj.states.push_back(std::move(step.next));
    if (with_jacobians) {
      traj.state_jacobians.push_back(std::move(step.dx));
      traj.input_jacobians.push_back(std::move(step.du));
    }
  }
  return traj;
}

inline Trajectory rollout(const DynamicGame& game, const DecisionVector& u,
                          bool with_jacobians = false) {
  return rollout(game, u.flat(), with_jacobians);
}

/**
 * Forward sensitivities dx_k/du_j of the rolled-out states with respect to the
 * joint input at step j, for 0 <= j < k <= N.
 */
class Sensitivities {
 public:
  Sensitivities(int horizon, std::vector<Matrix> blocks)
      : horizon_(horizon), blocks_(std::move(blocks)) {}

  /// dx_k / du_j; requires j < k.
  const Matrix& operator()(int k, int j) const {
    return blocks_[static_cast<std::size_t>(k * (k - 1) / 2 + j)];
  }
  int horizon() const { return horizon_; }

 private:
  int horizon_;
  std::vector<Matrix> blocks_;
};

inline Sensitivities input_sensitivities(const Trajectory& traj) {
  const int horizon = static_cast<int>(traj.input_jacobians.size());
  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<std::size_t>(horizon * (horizon + 1) / 2));
  // Row k holds dx_k/du_j for j = 0..k-1, stored contiguously.
  for (int k = 1; k <= horizon; ++k) {
    const std::size_t prev_row = static_cast<std::size_t>((k - 1) * (k - 2) / 2);
    for (int j = 0; j < k - 1; ++j) {
      blocks.push_back(traj.state_jacobians[k - 1] * blocks[prev_row + j]);
    }
    blocks.push_back(traj.input_jacobians[k - 1]);
  }
  return Sensitivities(horizon, std::move(blocks));
}

inline Sensitivities input_sensitivities(const DynamicGame& game,
                                         const Vector& u) {
  return input_sensitivities(rollout(game, u, true));
}

/// Costs, constraint values and (optionally) derivatives with respect to the
/// flattened input.
struct CondensedDerivatives {
  Vector costs;        // J^i, one per agent
  Vector h;            // stacked own-input cost gradients
  Vector constraints;  // C, n_c
  Matrix G;            // dC/du, n_c x (N m)
  Matrix L;            // stacked Lagrangian Hessian blocks
  Trajectory trajectory;
};

/// Values only: per-agent costs and constraint vector.
struct GameValues {
  Vector costs;
  Vector constraints;
  Trajectory trajectory;
};

inline GameValues evaluate_values(const DynamicGame& game, const Vector& u) {
  GameValues out;
  out.trajectory = rollout(game, u);
  const auto& def = game.definition();
  const int horizon = game.horizon();
  const auto& xs = out.trajectory.states;
  out.costs = Vector::Zero(game.num_agents());
  out.constraints.resize(game.num_constraints());
  for (int k = 0; k < horizon; ++k) {
    const Vector uk = game.joint_input(u, k);
    const Vector uprev = detail::previous_joint_input(game, u, k);
    for (int i = 0; i < game.num_agents(); ++i) {
      out.costs(i) += def.stage_costs[i](k, xs[k], uk, uprev, false).value;
    }
    int row = game.stage_row_offset(k);
    for (const auto& block : def.stage_constraints) {
      if (k < block.first_step) continue;
      out.constraints.segment(row, block.count) =
          block.eval(k, xs[k], uk, uprev, false).values;
      row += block.count;
    }
  }
  for (int i = 0; i < game.num_agents(); ++i) {
    out.costs(i) += def.terminal_costs[i](xs[horizon], false).value;
  }
  int row = game.terminal_row_offset();
  for (const auto& block : def.terminal_constraints) {
    out.constraints.segment(row, block.count) = block.eval(xs[horizon], false).values;
    row += block.count;
  }
  return out;
}

/// Costs, constraints and the stacked Lagrangian gradient grad L(u, lambda),
/// whose block i is grad_{u^i} J^i + (grad_{u^i} C)^T lambda.
struct FirstOrderValues {
  Vector costs;
  Vector constraints;
  Vector stationarity;
};

namespace detail {

// Per-step gradient contributions of one scalar function of the trajectory.
struct ScalarTerms {
  std::vector<Vector> dx;       // k = 0..N-1
  std::vector<Vector> du;       // k = 0..N-1
  std::vector<Vector> du_prev;  // k = 0..N-1
  Vector terminal_dx;
};

inline ScalarTerms zero_terms(const DynamicGame& game) {
  ScalarTerms t;
  t.dx.assign(game.horizon(), Vector::Zero(game.state_dim()));
  t.du.assign(game.horizon(), Vector::Zero(game.input_dim()));
  t.du_prev.assign(game.horizon(), Vector::Zero(game.input_dim()));
  t.terminal_dx = Vector::Zero(game.state_dim());
  return t;
}

// Reverse-mode sweep: gradient of a scalar with respect to every joint input.
inline std::vector<Vector> adjoint_gradient(const DynamicGame& game,
                                            const Trajectory& traj,
                                            const ScalarTerms& terms) {
  const int horizon = game.horizon();
  std::vector<Vector> grad(horizon);
  Vector costate = terms.terminal_dx;
  for (int k = horizon - 1; k >= 0; --k) {
    grad[k] = terms.du[k] + traj.input_jacobians[k].transpose() * costate;
    if (k + 1 < horizon) grad[k] += terms.du_prev[k + 1];
    costate = terms.dx[k] + traj.state_jacobians[k].transpose() * costate;
  }
  return grad;
}

}  // namespace detail

/**
 * First-order quantities via adjoint sweeps: one reverse pass per agent cost
 * plus one for lambda^T C. Cheaper than `evaluate` and used for the merit
 * function and the finite-difference Hessian.
 */
inline FirstOrderValues lagrangian_gradient(const DynamicGame& game,
                                            const Vector& u,
                                            const Vector& lambda) {
  detail::check_dims(game, u);
  if (lambda.size() != game.num_constraints()) {
    throw Error("multiplier vector length does not match constraint count");
  }
  const auto& def = game.definition();
  const int horizon = game.horizon();
  const int agents = game.num_agents();
  const Trajectory traj = rollout(game, u, true);
  const auto& xs = traj.states;

  FirstOrderValues out;
  out.costs = Vector::Zero(agents);
  out.constraints.resize(game.num_constraints());

  std::vector<detail::ScalarTerms> cost_terms(agents, detail::zero_terms(game));
  detail::ScalarTerms constraint_terms = detail::zero_terms(game);

  for (int k = 0; k < horizon; ++k) {
    const Vector uk = game.joint_input(u, k);
    const Vector uprev = detail::previous_joint_input(game, u, k);
    for (int i = 0; i < agents; ++i) {
      StageScalar l = def.stage_costs[i](k, xs[k], uk, uprev, true);
      out.costs(i) += l.value;
      cost_terms[i].dx[k] = std::move(l.dx);
      cost_terms[i].du[k] = std::move(l.du);
      cost_terms[i].du_prev[k] = std::move(l.du_prev);
    }
    int row = game.stage_row_offset(k);
    for (const auto& block : def.stage_constraints) {
      if (k < block.first_step) continue;
      StageVector c = block.eval(k, xs[k], uk, uprev, true);
      out.constraints.segment(row, block.count) = c.values;
      const auto weights = lambda.segment(row, block.count);
      constraint_terms.dx[k].noalias() += c.dx.transpose() * weights;
      constraint_terms.du[k].noalias() += c.du.transpose() * weights;
      constraint_terms.du_prev[k].noalias() += c.du_prev.transpose() * weights;
      row += block.count;
    }
  }
  for (int i = 0; i < agents; ++i) {
    TerminalScalar l = def.terminal_costs[i](xs[horizon], true);
    out.costs(i) += l.value;
    cost_terms[i].terminal_dx = std::move(l.dx);
  }
  int row = game.terminal_row_offset();
  for (const auto& block : def.terminal_constraints) {
    TerminalVector c = block.eval(xs[horizon], true);
    out.constraints.segment(row, block.count) = c.values;
    constraint_terms.terminal_dx.noalias() +=
        c.dx.transpose() * lambda.segment(row, block.count);
    row += block.count;
  }

  out.stationarity = Vector::Zero(game.num_variables());
  const auto multiplier_grad = detail::adjoint_gradient(game, traj, constraint_terms);
  for (int i = 0; i < agents; ++i) {
    const auto cost_grad = detail::adjoint_gradient(game, traj, cost_terms[i]);
    const int mi = game.input_dim(i);
    for (int k = 0; k < horizon; ++k) {
      out.stationarity.segment(game.agent_offset(i) + k * mi, mi) =
          cost_grad[k].segment(game.joint_offset(i), mi) +
          multiplier_grad[k].segment(game.joint_offset(i), mi);
    }
  }
  return out;
}

struct EvaluateOptions {
  bool hessian = true;
  /// Use GameDefinition::lagrangian_hessian when the game provides one.
  bool exact_hessian = false;
  /// Central-difference step for the Hessian of the analytic gradient.
  double fd_step = 1e-5;
};

/// Stacked Hessian L: row-block i holds the second derivatives of L^i, i.e.
/// the Jacobian of the stacked Lagrangian gradient.
inline Matrix lagrangian_hessian(const DynamicGame& game, const Vector& u,
                                 const Vector& lambda,
                                 const EvaluateOptions& options = {}) {
  if (options.exact_hessian && game.has_exact_hessian()) {
    return game.definition().lagrangian_hessian(u, lambda);
  }
  const int n = game.num_variables();
  Matrix hess(n, n);
  Vector shifted = u;
  for (int c = 0; c < n; ++c) {
    const double base = u(c);
    shifted(c) = base + options.fd_step;
    const Vector plus = lagrangian_gradient(game, shifted, lambda).stationarity;
    shifted(c) = base - options.fd_step;
    const Vector minus = lagrangian_gradient(game, shifted, lambda).stationarity;
    shifted(c) = base;
    hess.col(c) = (plus - minus) / (2.0 * options.fd_step);
  }
  return hess;
}

/**
 * Condensed costs, gradients h, constraint values C, Jacobian G (via forward
 * sensitivities) and the stacked Lagrangian Hessian L.
 */
inline CondensedDerivatives evaluate(const DynamicGame& game, const Vector& u,
                                     const Vector& lambda,
                                     const EvaluateOptions& options = {}) {
  detail::check_dims(game, u);
  if (lambda.size() != game.num_constraints()) {
    throw Error("multiplier vector length does not match constraint count");
  }
  const auto& def = game.definition();
  const int horizon = game.horizon();
  const int agents = game.num_agents();
  const int nu = game.num_variables();
  const int m = game.input_dim();

  CondensedDerivatives out;
  out.trajectory = rollout(game, u, true);
  const auto& xs = out.trajectory.states;
  const Sensitivities sens = input_sensitivities(out.trajectory);

  out.costs = Vector::Zero(agents);
  out.h = Vector::Zero(nu);
  out.constraints.resize(game.num_constraints());
  out.G = Matrix::Zero(game.num_constraints(), nu);

  // Gradient of a scalar term w.r.t. the joint input at step j, accumulated
  // per agent in joint coordinates and scattered once at the end.
  std::vector<std::vector<Vector>> cost_grad(
      agents, std::vector<Vector>(horizon, Vector::Zero(m)));

  auto scatter_rows = [&](Matrix& dst, int row, const Matrix& block, int step) {
    for (int c = 0; c < m; ++c) {
      dst.block(row, game.flat_index(step, c), block.rows(), 1) += block.col(c);
    }
  };

  for (int k = 0; k <= horizon; ++k) {
    const bool terminal = (k == horizon);
    const Vector uk = terminal ? Vector() : game.joint_input(u, k);
    const Vector uprev =
        terminal ? Vector() : detail::previous_joint_input(game, u, k);

    for (int i = 0; i < agents; ++i) {
      Vector dx;
      if (terminal) {
        TerminalScalar l = def.terminal_costs[i](xs[k], true);
        out.costs(i) += l.value;
        dx = std::move(l.dx);
      } else {
        StageScalar l = def.stage_costs[i](k, xs[k], uk, uprev, true);
        out.costs(i) += l.value;
        cost_grad[i][k] += l.du;
        if (k > 0) cost_grad[i][k - 1] += l.du_prev;
        dx = std::move(l.dx);
      }
      for (int j = 0; j < k; ++j) {
        cost_grad[i][j].noalias() += sens(k, j).transpose() * dx;
      }
    }

    auto add_rows = [&](int row, const Matrix& cdx, const Matrix* cdu,
                        const Matrix* cdu_prev) {
      for (int j = 0; j < k; ++j) {
        scatter_rows(out.G, row, cdx * sens(k, j), j);
      }
      if (cdu) scatter_rows(out.G, row, *cdu, k);
      if (cdu_prev && k > 0) scatter_rows(out.G, row, *cdu_prev, k - 1);
    };

    if (terminal) {
      int row = game.terminal_row_offset();
      for (const auto& block : def.terminal_constraints) {
        TerminalVector c = block.eval(xs[k], true);
        out.constraints.segment(row, block.count) = c.values;
        add_rows(row, c.dx, nullptr, nullptr);
        row += block.count;
      }
    } else {
      int row = game.stage_row_offset(k);
      for (const auto& block : def.stage_constraints) {
        if (k < block.first_step) continue;
        StageVector c = block.eval(k, xs[k], uk, uprev, true);
        out.constraints.segment(row, block.count) = c.values;
        add_rows(row, c.dx, &c.du, &c.du_prev);
        row += block.count;
      }
    }
  }

  for (int i = 0; i < agents; ++i) {
    const int mi = game.input_dim(i);
    for (int k = 0; k < horizon; ++k) {
      out.h.segment(game.agent_offset(i) + k * mi, mi) =
          cost_grad[i][k].segment(game.joint_offset(i), mi);
    }
  }

  if (options.hessian) out.L = lagrangian_hessian(game, u, lambda, options);
  return out;
}

inline CondensedDerivatives evaluate(const DynamicGame& game,
                                     const DecisionVector& u,
                                     const Vector& lambda,
                                     const EvaluateOptions& options = {}) {
  return evaluate(game, u.flat(), lambda, options);
}

}  // namespace dgsqp
