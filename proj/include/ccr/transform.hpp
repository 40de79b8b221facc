#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ccr {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

template <typename Scalar>
using Rotation = Matrix3<Scalar>;

/**
 * Rigid transform between two frames. Positions are in millimeters.
 *
 * Maps coordinates expressed in the child frame into the parent frame:
 * x_parent = rotation * x_child + position.
 */
template <typename Scalar>
struct Pose {
  Rotation<Scalar> rotation = Rotation<Scalar>::Identity();
  Vector3<Scalar> position = Vector3<Scalar>::Zero();

  static Pose Identity() { return Pose{}; }

  /// z-axis of the frame, i.e. the backbone tangent for robot frames.
  Vector3<Scalar> tangent() const { return rotation.col(2); }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> T = Eigen::Matrix<Scalar, 4, 4>::Identity();
    T.template topLeftCorner<3, 3>() = rotation;
    T.template topRightCorner<3, 1>() = position;
    return T;
  }

  template <typename NewScalar>
  Pose<NewScalar> cast() const {
    return {rotation.template cast<NewScalar>(), position.template cast<NewScalar>()};
  }
};

using Posed = Pose<double>;

namespace detail {
template <typename Scalar>
void require_finite(Scalar value, const char* what) {
  using std::isfinite;
  if (!isfinite(value)) {
    throw std::invalid_argument(std::string(what) + ": non-finite input");
  }
}
}  // namespace detail

template <typename Scalar>
Rotation<Scalar> rot_z(Scalar angle) {
  detail::require_finite(angle, "rot_z");
  using std::cos;
  using std::sin;
  const Scalar c = cos(angle), s = sin(angle);
  Rotation<Scalar> R;
  R << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return R;
}

template <typename Scalar>
Rotation<Scalar> rot_y(Scalar angle) {
  detail::require_finite(angle, "rot_y");
  using std::cos;
  using std::sin;
  const Scalar c = cos(angle), s = sin(angle);
  Rotation<Scalar> R;
  R << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return R;
}

/// Cross-product matrix: skew(v) * w == v.cross(w).
template <typename Derived>
Matrix3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using Scalar = typename Derived::Scalar;
  Matrix3<Scalar> S;
  S << Scalar(0), -v(2), v(1),
       v(2), Scalar(0), -v(0),
       -v(1), v(0), Scalar(0);
  return S;
}

template <typename Scalar>
Pose<Scalar> compose(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return {a.rotation * b.rotation, a.rotation * b.position + a.position};
}

template <typename Scalar>
Pose<Scalar> operator*(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return compose(a, b);
}

template <typename Scalar>
Pose<Scalar> inverse(const Pose<Scalar>& p) {
  const Rotation<Scalar> Rt = p.rotation.transpose();
  return {Rt, -(Rt * p.position)};
}

template <typename Scalar>
Pose<Scalar> translate_z(Scalar d) {
  detail::require_finite(d, "translate_z");
  Pose<Scalar> T;
  T.position.z() = d;
  return T;
}

/// Rotation by |rotvec| about rotvec's direction.
template <typename Scalar>
Rotation<Scalar> rotation_from_vector(const Vector3<Scalar>& rotvec) {
  const Scalar angle = rotvec.norm();
  if (angle == Scalar(0)) return Rotation<Scalar>::Identity();
  return Eigen::AngleAxis<Scalar>(angle, rotvec / angle).toRotationMatrix();
}

template <typename Scalar>
bool is_rotation(const Rotation<Scalar>& R, Scalar tol = Scalar(1e-10)) {
  using std::abs;
  const Scalar ortho = (R.transpose() * R - Rotation<Scalar>::Identity()).norm();
  return ortho < tol && abs(R.determinant() - Scalar(1)) < tol;
}

}  // namespace ccr
