#pragma once

#include <Eigen/Core>

#include <cmath>
#include <memory>
#include <vector>

#include "dgsqp/errors.hpp"
#include "dgsqp/game.hpp"
#include "dgsqp/scenarios/track.hpp"

namespace dgsqp::scenarios {

/// State layout of one agent: [p_x, p_y, v_x, e_psi, s, e_y].
enum StateIndex : int { kPx = 0, kPy, kV, kEpsi, kS, kEy, kStateDim };
/// Input layout of one agent: [a, delta].
enum InputIndex : int { kAccel = 0, kSteer, kInputDim };

struct VehicleParams {
  double lf = 0.13;  // m
  double lr = 0.13;  // m
  double radius = 0.1;  // collision buffer, m
  double accel_max = 2.0;  // |a|, m/s^2
  double steer_max = 0.45;  // |delta|, rad
  double accel_rate_max = 1.0;  // |a_k - a_{k-1}|
  double steer_rate_max = 0.3;  // |delta_k - delta_{k-1}|

  double length() const { return lf + lr; }
};

struct BicycleEval {
  Vector next;
  Matrix dx;  // 6 x 6
  Matrix du;  // 6 x 2
};

/**
 * One explicit Euler step of the kinematic bicycle in the track's Frenet frame.
 *
 *   beta    = atan(lr tan(delta) / (lf + lr))
 *   p_x'    = v cos(psi + beta),  p_y' = v sin(psi + beta),  psi = e_psi + theta(s)
 *   v'      = a
 *   s'      = v cos(e_psi + beta) / (1 - kappa(s) e_y)
 *   e_y'    = v sin(e_psi + beta)
 *   e_psi'  = v sin(beta) / lr - kappa(s) s'
 */
inline BicycleEval bicycle_step(const VehicleParams& vehicle, const Track& track,
                                const Eigen::Ref<const Vector>& x,
                                const Eigen::Ref<const Vector>& u, double dt,
                                bool derivatives) {
  const double v = x(kV), epsi = x(kEpsi), s = x(kS), ey = x(kEy);
  const double a = u(kAccel), delta = u(kSteer);
  const double wheelbase = vehicle.lf + vehicle.lr;

  const double kappa = track.curvature(s);
  const double denom = 1.0 - kappa * ey;
  if (!(denom > 0.0)) {
    throw DynamicsSingularityError("Frenet frame singular: 1 - kappa * e_y <= 0");
  }
  const double tan_delta = std::tan(delta);
  const double ratio = vehicle.lr / wheelbase;
  const double beta = std::atan(ratio * tan_delta);
  const double psi = epsi + track.heading(s);
  const double c_psi = std::cos(psi + beta), s_psi = std::sin(psi + beta);
  const double c_g = std::cos(epsi + beta), s_g = std::sin(epsi + beta);

  const double s_dot = v * c_g / denom;
  Vector rate(kStateDim);
  rate(kPx) = v * c_psi;
  rate(kPy) = v * s_psi;
  rate(kV) = a;
  rate(kEpsi) = v * std::sin(beta) / vehicle.lr - kappa * s_dot;
  rate(kS) = s_dot;
  rate(kEy) = v * s_g;

  BicycleEval out;
  out.next = x + dt * rate;
  if (!derivatives) return out;

  const double dkappa = track.curvature_derivative(s);
  const double dbeta = ratio * (1.0 + tan_delta * tan_delta) /
                       (1.0 + ratio * ratio * tan_delta * tan_delta);

  Matrix jx = Matrix::Zero(kStateDim, kStateDim);
  Matrix ju = Matrix::Zero(kStateDim, kInputDim);

  jx(kPx, kV) = c_psi;
  jx(kPx, kEpsi) = -v * s_psi;
  jx(kPx, kS) = -v * s_psi * kappa;
  ju(kPx, kSteer) = -v * s_psi * dbeta;

  jx(kPy, kV) = s_psi;
  jx(kPy, kEpsi) = v * c_psi;
  jx(kPy, kS) = v * c_psi * kappa;
  ju(kPy, kSteer) = v * c_psi * dbeta;

  ju(kV, kAccel) = 1.0;

  const double sdot_v = c_g / denom;
  const double sdot_epsi = -v * s_g / denom;
  const double sdot_delta = -v * s_g * dbeta / denom;
  const double sdot_ey = v * c_g * kappa / (denom * denom);
  const double sdot_s = v * c_g * dkappa * ey / (denom * denom);
  jx(kS, kV) = sdot_v;
  jx(kS, kEpsi) = sdot_epsi;
  jx(kS, kEy) = sdot_ey;
  jx(kS, kS) = sdot_s;
  ju(kS, kSteer) = sdot_delta;

  jx(kEy, kV) = s_g;
  jx(kEy, kEpsi) = v * c_g;
  ju(kEy, kSteer) = v * c_g * dbeta;

  jx(kEpsi, kV) = std::sin(beta) / vehicle.lr - kappa * sdot_v;
  jx(kEpsi, kEpsi) = -kappa * sdot_epsi;
  jx(kEpsi, kEy) = -kappa * sdot_ey;
  jx(kEpsi, kS) = -dkappa * s_dot - kappa * sdot_s;
  ju(kEpsi, kSteer) = v * std::cos(beta) * dbeta / vehicle.lr - kappa * sdot_delta;

  out.dx = Matrix::Identity(kStateDim, kStateDim) + dt * jx;
  out.du = dt * ju;
  return out;
}

/// Block-diagonal joint dynamics of several bicycles sharing one track.
inline DynamicsFn joint_bicycle_dynamics(std::vector<VehicleParams> vehicles,
                                         std::shared_ptr<const Track> track,
                                         double dt) {
  return [vehicles = std::move(vehicles), track = std::move(track), dt](
             int, const Vector& x, const Vector& u, bool derivatives) {
    const int agents = static_cast<int>(vehicles.size());
    DynamicsEval out;
    out.next.resize(agents * kStateDim);
    if (derivatives) {
      out.dx = Matrix::Zero(agents * kStateDim, agents * kStateDim);
      out.du = Matrix::Zero(agents * kStateDim, agents * kInputDim);
    }
    for (int i = 0; i < agents; ++i) {
      BicycleEval e = bicycle_step(vehicles[i], *track,
                                   x.segment(i * kStateDim, kStateDim),
                                   u.segment(i * kInputDim, kInputDim), dt,
                                   derivatives);
      out.next.segment(i * kStateDim, kStateDim) = e.next;
      if (derivatives) {
        out.dx.block(i * kStateDim, i * kStateDim, kStateDim, kStateDim) = e.dx;
        out.du.block(i * kStateDim, i * kInputDim, kStateDim, kInputDim) = e.du;
      }
    }
    return out;
  };
}

/// Frenet state with e_psi = 0 and Cartesian position from the centerline.
inline Vector frenet_state(const Track& track, double s, double e_y, double v,
                           double e_psi = 0.0) {
  Vector x(kStateDim);
  const Eigen::Vector2d p = track.to_cartesian(s, e_y);
  x << p.x(), p.y(), v, e_psi, s, e_y;
  return x;
}

}  // namespace dgsqp::scenarios
