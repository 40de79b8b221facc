#pragma once

#include <cmath>

#include <Eigen/LU>

#include "ccr/actuation.hpp"
#include "ccr/errors.hpp"
#include "ccr/kinematics.hpp"

namespace ccr {

template <typename Scalar>
using Matrix36 = Eigen::Matrix<Scalar, 3, 6>;

template <typename Scalar>
using Matrix6 = Eigen::Matrix<Scalar, 6, 6>;

/// Rates of one segment's end frame w.r.t. (theta, L, delta), in the segment base frame.
template <typename Scalar>
struct SegmentJacobian {
  Matrix3<Scalar> Jv;  ///< d(position)/d(theta, L, delta)
  Matrix3<Scalar> Jw;  ///< angular velocity per unit (theta, L, delta) rate
};

template <typename Scalar>
SegmentJacobian<Scalar> segment_jacobian(Scalar theta, Scalar L, Scalar delta) {
  detail::check_segment(theta, L, delta);
  using std::cos;
  using std::sin;
  const ArcTerms<Scalar> a = arc_terms(theta);
  const Scalar cd = cos(delta), sd = sin(delta);
  const Scalar st = sin(theta);
  const Scalar one_minus_ct = a.h * theta;

  SegmentJacobian<Scalar> J;
  J.Jv << L * a.dh * cd, a.h * cd, -L * a.h * sd,
          L * a.dh * sd, a.h * sd, L * a.h * cd,
          L * a.dsigma, a.sigma, Scalar(0);
  J.Jw << -sd, Scalar(0), -cd * st,
          cd, Scalar(0), -sd * st,
          Scalar(0), Scalar(0), one_minus_ct;
  return J;
}

/**
 * Jacobian of the frame at arc length s = L - offset, still w.r.t. the whole
 * segment's (theta, L, delta). The partial arc bends by theta * s / L.
 */
template <typename Scalar>
SegmentJacobian<Scalar> segment_point_jacobian(Scalar theta, Scalar L, Scalar delta, Scalar s) {
  if (s == L) return segment_jacobian(theta, L, delta);
  detail::check_segment(theta, L, delta);
  if (!(s > 0) || s > L) throw std::invalid_argument("segment: point outside the arc");
  const Scalar offset = L - s;
  SegmentJacobian<Scalar> J = segment_jacobian(theta * s / L, s, delta);
  Matrix3<Scalar> chain = Matrix3<Scalar>::Identity();
  chain(0, 0) = s / L;
  chain(0, 1) = theta * offset / (L * L);
  J.Jv = J.Jv * chain;
  J.Jw = J.Jw * chain;
  return J;
}

/// Position and tangent Jacobians of both coils w.r.t. Psi, base frame.
template <typename Scalar>
struct CoilJacobians {
  Matrix36<Scalar> sheath_position;
  Matrix36<Scalar> sheath_tangent;
  Matrix36<Scalar> catheter_position;
  Matrix36<Scalar> catheter_tangent;
  Vector3<Scalar> catheter_insertion;  ///< d(catheter position)/d(Ln)
};

template <typename Scalar>
CoilJacobians<Scalar> coil_jacobians(const ConfigPsi<Scalar>& psi, const RobotGeometry<Scalar>& geom) {
  validate(geom);
  const Pose<Scalar> T1 = segment_fk(psi.theta1, psi.L1, psi.delta1);
  const SegmentJacobian<Scalar> J1 = segment_jacobian(psi.theta1, psi.L1, psi.delta1);

  const Scalar s1 = psi.L1 - geom.coil_offset1;
  const Pose<Scalar> T1c = segment_point_fk(psi.theta1, psi.L1, psi.delta1, s1);
  const SegmentJacobian<Scalar> J1c = segment_point_jacobian(psi.theta1, psi.L1, psi.delta1, s1);

  const Scalar s2 = psi.L2 - geom.coil_offset2;
  const Pose<Scalar> T2c = segment_point_fk(psi.theta2, psi.L2, psi.delta2, s2);
  const SegmentJacobian<Scalar> J2c = segment_point_jacobian(psi.theta2, psi.L2, psi.delta2, s2);

  CoilJacobians<Scalar> out;
  out.sheath_position.setZero();
  out.sheath_tangent.setZero();
  out.sheath_position.template leftCols<3>() = J1c.Jv;
  out.sheath_tangent.template leftCols<3>() = -skew(T1c.tangent()) * J1c.Jw;

  // Lever arm from {1e} to the catheter coil, in base coordinates.
  Vector3<Scalar> lever = T2c.position;
  lever.z() += geom.Ln;
  lever = T1.rotation * lever;

  out.catheter_position.template leftCols<3>() = J1.Jv - skew(lever) * J1.Jw;
  out.catheter_position.template rightCols<3>() = T1.rotation * J2c.Jv;

  Matrix36<Scalar> Jw;
  Jw.template leftCols<3>() = J1.Jw;
  Jw.template rightCols<3>() = T1.rotation * J2c.Jw;
  const Vector3<Scalar> t2 = T1.rotation * T2c.tangent();
  out.catheter_tangent = -skew(t2) * Jw;

  out.catheter_insertion = T1.tangent();
  return out;
}

/// d(catheter coil position)/d(Psi): the controlled point's linear Jacobian.
template <typename Scalar>
Matrix36<Scalar> robot_linear_jacobian(const ConfigPsi<Scalar>& psi, const RobotGeometry<Scalar>& geom) {
  return coil_jacobians(psi, geom).catheter_position;
}

/// dPsi/dq for actuation_to_shape.
template <typename Scalar>
Matrix6<Scalar> actuation_jacobian(const ActuationQ<Scalar>& q, const ActuationParams<Scalar>& p) {
  using std::cos;
  using std::sin;
  const Scalar rel = q.delta1 - q.delta2;
  const Scalar coupling_rate = p.kc * p.k1 * q.gamma1 * sin(rel);
  Matrix6<Scalar> Jq = Matrix6<Scalar>::Zero();
  Jq(0, 2) = p.k1;                   // theta1 / gamma1
  Jq(1, 1) = Scalar(1);              // L1 / beta1
  Jq(2, 0) = Scalar(1);              // delta1 / delta1
  Jq(3, 0) = -coupling_rate;         // theta2 / delta1
  Jq(3, 2) = p.kc * p.k1 * cos(rel); // theta2 / gamma1
  Jq(3, 3) = coupling_rate;          // theta2 / delta2
  Jq(3, 5) = p.k2;                   // theta2 / gamma2
  Jq(4, 4) = Scalar(1);              // L2 / beta2
  Jq(5, 3) = Scalar(1);              // delta2 / delta2
  return Jq;
}

/**
 * Task Jacobian of the catheter coil w.r.t. handle commands.
 *
 * J = Jv * Jq + insertion, where insertion carries the dependence of the
 * straight connector length on (beta1, beta2) under InsertionModel::coupled
 * and is zero under InsertionModel::fixed.
 */
template <typename Scalar>
struct ControlJacobian {
  Matrix36<Scalar> Jv;
  Matrix6<Scalar> Jq;
  Matrix36<Scalar> insertion;
  Matrix36<Scalar> J;
};

/// geom.Ln must already reflect q (see actuated_geometry).
template <typename Scalar>
ControlJacobian<Scalar> control_jacobian(const ConfigPsi<Scalar>& psi, const ActuationQ<Scalar>& q,
                                         const ActuationParams<Scalar>& p, const RobotGeometry<Scalar>& geom) {
  const CoilJacobians<Scalar> cj = coil_jacobians(psi, geom);
  ControlJacobian<Scalar> out;
  out.Jv = cj.catheter_position;
  out.Jq = actuation_jacobian(q, p);
  out.insertion = cj.catheter_insertion * insertion_gradient(p);
  out.J = out.Jv * out.Jq + out.insertion;
  return out;
}

/**
 * Damped least-squares inverse J^T (J J^T + lambda^2 I)^-1. With lambda = 0
 * and full row rank this is the Moore-Penrose pseudo-inverse.
 */
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::ColsAtCompileTime, Derived::RowsAtCompileTime>
damped_pinv(const Eigen::MatrixBase<Derived>& J, typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  using Square = Eigen::Matrix<Scalar, Derived::RowsAtCompileTime, Derived::RowsAtCompileTime>;
  if (!(lambda >= 0)) throw std::invalid_argument("damped_pinv: damping must be non-negative");
  const Square A = J * J.transpose() + lambda * lambda * Square::Identity(J.rows(), J.rows());
  const Eigen::FullPivLU<Square> lu(A);
  if (!lu.isInvertible()) throw RankDeficiencyError("damped_pinv: J J^T is singular");
  return J.transpose() * lu.solve(Square::Identity(J.rows(), J.rows()));
}

}  // namespace ccr
