#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ccr/kinematics.hpp"

namespace ccr {

/**
 * Handle commands, sheath (1) and catheter (2): axial rotation delta [rad],
 * axial translation beta [mm], knob rotation gamma [rad].
 */
template <typename Scalar>
struct ActuationQ {
  Scalar delta1 = 0, beta1 = 0, gamma1 = 0;
  Scalar delta2 = 0, beta2 = 0, gamma2 = 0;

  /// Component order [delta1, beta1, gamma1, delta2, beta2, gamma2].
  Vector6<Scalar> vector() const {
    Vector6<Scalar> v;
    v << delta1, beta1, gamma1, delta2, beta2, gamma2;
    return v;
  }

  static ActuationQ from_vector(const Vector6<Scalar>& v) {
    return {v(0), v(1), v(2), v(3), v(4), v(5)};
  }
};

using ActuationQd = ActuationQ<double>;

/// How the straight connector length responds to relative insertion.
enum class InsertionModel {
  fixed,    ///< Ln = cn
  coupled,  ///< Ln = cn + (beta2 - beta1)
};

/**
 * Map from handle commands to shape:
 *   theta1 = k1 gamma1
 *   theta2 = k2 gamma2 + kc theta1 cos(delta1 - delta2)
 *   L_i    = beta_i + b_i
 * r1, r2 are the tendon offsets from the backbone, used for tendon bookkeeping.
 */
template <typename Scalar>
struct ActuationParams {
  Scalar k1 = 0.5;
  Scalar k2 = 0.5;
  Scalar kc = 0.15;
  Scalar b1 = 45;
  Scalar b2 = 30;
  Scalar r1 = 1.5;
  Scalar r2 = 1.0;
  Scalar cn = 10;
  InsertionModel insertion = InsertionModel::coupled;
};

using ActuationParamsd = ActuationParams<double>;

template <typename Scalar>
void validate(const ActuationParams<Scalar>& p) {
  if (!(p.k1 > 0) || !(p.k2 > 0)) throw std::out_of_range("ActuationParams: k1, k2 must be positive");
  if (!(p.b1 >= 0) || !(p.b2 >= 0)) throw std::out_of_range("ActuationParams: b1, b2 must be non-negative");
  if (!(p.r1 > 0) || !(p.r2 > 0)) throw std::out_of_range("ActuationParams: r1, r2 must be positive");
  if (!(p.cn >= 0)) throw std::out_of_range("ActuationParams: cn must be non-negative");
}

/// Symmetric knob and rotation limits plus the insertion stroke.
template <typename Scalar>
struct ActuationLimits {
  Scalar beta_min = 0;
  Scalar beta_max = 50;
  Scalar gamma_max = 5;  // with the default gains, full deflection stays below theta_max
  Scalar delta_max = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar theta_max = std::numbers::pi_v<Scalar>;
};

using ActuationLimitsd = ActuationLimits<double>;

template <typename Scalar>
Vector6<Scalar> lower_bounds(const ActuationLimits<Scalar>& lim) {
  Vector6<Scalar> lo;
  lo << -lim.delta_max, lim.beta_min, -lim.gamma_max, -lim.delta_max, lim.beta_min, -lim.gamma_max;
  return lo;
}

template <typename Scalar>
Vector6<Scalar> upper_bounds(const ActuationLimits<Scalar>& lim) {
  Vector6<Scalar> hi;
  hi << lim.delta_max, lim.beta_max, lim.gamma_max, lim.delta_max, lim.beta_max, lim.gamma_max;
  return hi;
}

template <typename Scalar>
bool within_limits(const ActuationQ<Scalar>& q, const ActuationLimits<Scalar>& lim) {
  const Vector6<Scalar> v = q.vector();
  return (v.array() >= lower_bounds(lim).array()).all() && (v.array() <= upper_bounds(lim).array()).all();
}

template <typename Scalar>
struct ClippedQ {
  ActuationQ<Scalar> q;
  bool saturated = false;
};

template <typename Scalar>
ClippedQ<Scalar> clip_to_limits(const ActuationQ<Scalar>& q, const ActuationLimits<Scalar>& lim) {
  const Vector6<Scalar> v = q.vector();
  const Vector6<Scalar> c = v.cwiseMax(lower_bounds(lim)).cwiseMin(upper_bounds(lim));
  return {ActuationQ<Scalar>::from_vector(c), c != v};
}

template <typename Scalar>
ConfigPsi<Scalar> actuation_to_shape(const ActuationQ<Scalar>& q, const ActuationParams<Scalar>& p,
                                     Scalar theta_max = std::numbers::pi_v<Scalar>) {
  using std::cos;
  ConfigPsi<Scalar> psi;
  psi.theta1 = p.k1 * q.gamma1;
  psi.theta2 = p.k2 * q.gamma2 + p.kc * psi.theta1 * cos(q.delta1 - q.delta2);
  psi.L1 = q.beta1 + p.b1;
  psi.L2 = q.beta2 + p.b2;
  psi.delta1 = q.delta1;
  psi.delta2 = q.delta2;
  psi = psi.normalized();
  validate(psi, theta_max);
  return psi;
}

/// Inverse of actuation_to_shape for the given rotations: recovers (beta, gamma).
template <typename Scalar>
ActuationQ<Scalar> shape_to_actuation(const ConfigPsi<Scalar>& psi, const ActuationParams<Scalar>& p) {
  using std::cos;
  ActuationQ<Scalar> q;
  q.delta1 = psi.delta1;
  q.delta2 = psi.delta2;
  q.gamma1 = psi.theta1 / p.k1;
  q.gamma2 = (psi.theta2 - p.kc * psi.theta1 * cos(psi.delta1 - psi.delta2)) / p.k2;
  q.beta1 = psi.L1 - p.b1;
  q.beta2 = psi.L2 - p.b2;
  return q;
}

template <typename Scalar>
Scalar insertion_length(const ActuationQ<Scalar>& q, const ActuationParams<Scalar>& p) {
  const Scalar Ln = p.insertion == InsertionModel::fixed ? p.cn : p.cn + (q.beta2 - q.beta1);
  if (!(Ln >= 0)) throw std::out_of_range("straight connector length would be negative");
  return Ln;
}

/// dLn/dq in actuation order.
template <typename Scalar>
Eigen::Matrix<Scalar, 1, 6> insertion_gradient(const ActuationParams<Scalar>& p) {
  Eigen::Matrix<Scalar, 1, 6> g = Eigen::Matrix<Scalar, 1, 6>::Zero();
  if (p.insertion == InsertionModel::coupled) {
    g(1) = Scalar(-1);
    g(4) = Scalar(1);
  }
  return g;
}

/// geom with Ln set from the commanded insertion.
template <typename Scalar>
RobotGeometry<Scalar> actuated_geometry(const ActuationQ<Scalar>& q, const ActuationParams<Scalar>& p,
                                        RobotGeometry<Scalar> geom) {
  geom.Ln = insertion_length(q, p);
  return geom;
}

/**
 * Tendon bookkeeping under constant curvature. d_i = L_i - l_i is the pull on
 * segment i's own tendon; coupled = L1 - l21 is the catheter tendon's length
 * change across the bent sheath. l1, l2, l21 are the resulting tendon lengths.
 */
template <typename Scalar>
struct TendonDisplacement {
  Scalar d1, d2, coupled;
  Scalar l1, l2, l21;
};

template <typename Scalar>
TendonDisplacement<Scalar> tendon_displacement(const ConfigPsi<Scalar>& psi, const ActuationParams<Scalar>& p) {
  using std::cos;
  TendonDisplacement<Scalar> t;
  t.d1 = p.r1 * psi.theta1;
  t.d2 = p.r2 * psi.theta2;
  t.coupled = p.r2 * psi.theta1 * cos(psi.delta1 - psi.delta2);
  t.l1 = psi.L1 - t.d1;
  t.l2 = psi.L2 - t.d2;
  t.l21 = psi.L1 - t.coupled;
  return t;
}

}  // namespace ccr
