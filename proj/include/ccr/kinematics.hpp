#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ccr/transform.hpp"

namespace ccr {

template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar normalize_angle(Scalar angle) {
  using std::remainder;
  Scalar wrapped = remainder(angle, Scalar(2) * std::numbers::pi_v<Scalar>);
  if (wrapped <= -std::numbers::pi_v<Scalar>) wrapped += Scalar(2) * std::numbers::pi_v<Scalar>;
  return wrapped;
}

/**
 * Shape of the two-segment robot: bend angle, arc length and bend-plane
 * direction of the sheath (1) and catheter (2) bending segments.
 * Angles in radians, lengths in millimeters.
 */
template <typename Scalar>
struct ConfigPsi {
  Scalar theta1 = 0, L1 = 1, delta1 = 0;
  Scalar theta2 = 0, L2 = 1, delta2 = 0;

  /// Component order [theta1, L1, delta1, theta2, L2, delta2].
  Vector6<Scalar> vector() const {
    Vector6<Scalar> v;
    v << theta1, L1, delta1, theta2, L2, delta2;
    return v;
  }

  static ConfigPsi from_vector(const Vector6<Scalar>& v) {
    return {v(0), v(1), v(2), v(3), v(4), v(5)};
  }

  ConfigPsi normalized() const {
    ConfigPsi out = *this;
    out.delta1 = normalize_angle(delta1);
    out.delta2 = normalize_angle(delta2);
    return out;
  }
};

using ConfigPsid = ConfigPsi<double>;

template <typename Scalar>
void validate(const ConfigPsi<Scalar>& psi, Scalar theta_max = std::numbers::pi_v<Scalar>) {
  using std::abs;
  using std::isfinite;
  const Vector6<Scalar> v = psi.vector();
  for (int i = 0; i < 6; ++i) {
    if (!isfinite(v(i))) throw std::invalid_argument("ConfigPsi: non-finite component");
  }
  if (!(psi.L1 > 0) || !(psi.L2 > 0)) throw std::out_of_range("ConfigPsi: arc lengths must be positive");
  if (!(abs(psi.theta1) < theta_max) || !(abs(psi.theta2) < theta_max)) {
    throw std::out_of_range("ConfigPsi: bend angle outside deflection range");
  }
}

/**
 * (theta, delta) and (-theta, delta + pi) describe the same arc. Picks, per
 * segment, the one whose delta lies closer to the reference's. The shape is
 * unchanged.
 */
template <typename Scalar>
ConfigPsi<Scalar> align_bend_planes(const ConfigPsi<Scalar>& psi, const ConfigPsi<Scalar>& reference) {
  using std::abs;
  const auto align = [](Scalar& theta, Scalar& delta, Scalar ref) {
    const Scalar flipped = normalize_angle(delta + std::numbers::pi_v<Scalar>);
    if (abs(normalize_angle(flipped - ref)) < abs(normalize_angle(delta - ref))) {
      theta = -theta;
      delta = flipped;
    }
  };
  ConfigPsi<Scalar> out = psi.normalized();
  align(out.theta1, out.delta1, reference.delta1);
  align(out.theta2, out.delta2, reference.delta2);
  return out;
}

/// Straight connector length and coil mounting offsets (arc length back from each segment end), mm.
template <typename Scalar>
struct RobotGeometry {
  Scalar Ln = 0;
  Scalar coil_offset1 = 0;
  Scalar coil_offset2 = 0;
};

using RobotGeometryd = RobotGeometry<double>;

template <typename Scalar>
void validate(const RobotGeometry<Scalar>& geom) {
  if (!(geom.Ln >= 0) || !(geom.coil_offset1 >= 0) || !(geom.coil_offset2 >= 0)) {
    throw std::out_of_range("RobotGeometry: lengths must be non-negative");
  }
}

/// Below this |theta| the arc functions switch to their Taylor expansions.
template <typename Scalar>
inline constexpr Scalar kSingularTheta = Scalar(1e-6);

/**
 * Scalar functions of the bend angle shared by the arc position and its
 * derivatives:
 *   p = L * [h cos(delta), h sin(delta), sigma],
 *   h = (1 - cos theta) / theta,  sigma = sin(theta) / theta,
 *   dh = dh/dtheta,  dsigma = dsigma/dtheta.
 */
template <typename Scalar>
struct ArcTerms {
  Scalar h, sigma, dh, dsigma;
};

namespace detail {

template <typename Scalar>
ArcTerms<Scalar> arc_terms_series(Scalar t) {
  const Scalar t2 = t * t;
  const Scalar t4 = t2 * t2;
  return {t / Scalar(2) - t * t2 / Scalar(24),
          Scalar(1) - t2 / Scalar(6) + t4 / Scalar(120),
          Scalar(0.5) - t2 / Scalar(8) + t4 / Scalar(144),
          -t / Scalar(3) + t * t2 / Scalar(30)};
}

template <typename Scalar>
ArcTerms<Scalar> arc_terms_closed(Scalar t) {
  using std::abs;
  using std::cos;
  using std::sin;
  const Scalar s = sin(t), c = cos(t);
  const Scalar half = sin(t / Scalar(2));
  const Scalar one_minus_c = Scalar(2) * half * half;
  const Scalar t2 = t * t;
  ArcTerms<Scalar> a;
  a.h = one_minus_c / t;
  a.sigma = s / t;
  a.dh = (t * s - one_minus_c) / t2;
  // t*cos(t) - sin(t) cancels to O(t^3); keep the expansion until it is harmless.
  if (abs(t) < Scalar(1e-3)) {
    a.dsigma = -t / Scalar(3) + t * t2 / Scalar(30) - t * t2 * t2 / Scalar(840);
  } else {
    a.dsigma = (t * c - s) / t2;
  }
  return a;
}

}  // namespace detail

template <typename Scalar>
ArcTerms<Scalar> arc_terms(Scalar theta) {
  using std::abs;
  return abs(theta) < kSingularTheta<Scalar> ? detail::arc_terms_series(theta)
                                             : detail::arc_terms_closed(theta);
}

namespace detail {
template <typename Scalar>
void check_segment(Scalar theta, Scalar L, Scalar delta) {
  using std::isfinite;
  if (!isfinite(theta) || !isfinite(L) || !isfinite(delta)) {
    throw std::invalid_argument("segment: non-finite parameter");
  }
  if (!(L > 0)) throw std::invalid_argument("segment: arc length must be positive");
}
}  // namespace detail

/// Constant-curvature arc: base frame {ib} to end frame {ie}.
template <typename Scalar>
Pose<Scalar> segment_fk(Scalar theta, Scalar L, Scalar delta) {
  detail::check_segment(theta, L, delta);
  using std::cos;
  using std::sin;
  const ArcTerms<Scalar> a = arc_terms(theta);
  Pose<Scalar> T;
  T.rotation = rot_z(delta) * rot_y(theta) * rot_z(-delta);
  T.position << L * a.h * cos(delta), L * a.h * sin(delta), L * a.sigma;
  return T;
}

/// Frame at arc length s (0 < s <= L) along a segment of total bend theta.
template <typename Scalar>
Pose<Scalar> segment_point_fk(Scalar theta, Scalar L, Scalar delta, Scalar s) {
  detail::check_segment(theta, L, delta);
  if (!(s > 0) || s > L) throw std::invalid_argument("segment: point outside the arc");
  return segment_fk(theta * s / L, s, delta);
}

/// Base frame {1b} to the catheter end frame {2e}.
template <typename Scalar>
Pose<Scalar> full_fk(const ConfigPsi<Scalar>& psi, const RobotGeometry<Scalar>& geom) {
  return segment_fk(psi.theta1, psi.L1, psi.delta1) * translate_z(geom.Ln) *
         segment_fk(psi.theta2, psi.L2, psi.delta2);
}

template <typename Scalar>
struct CoilPoses {
  Pose<Scalar> sheath;
  Pose<Scalar> catheter;
};

/// Frames of the sheath and catheter tracking coils in the base frame.
template <typename Scalar>
CoilPoses<Scalar> coil_fk(const ConfigPsi<Scalar>& psi, const RobotGeometry<Scalar>& geom) {
  validate(geom);
  const Pose<Scalar> seg1 = segment_fk(psi.theta1, psi.L1, psi.delta1);
  CoilPoses<Scalar> out;
  out.sheath = geom.coil_offset1 == Scalar(0)
                   ? seg1
                   : segment_point_fk(psi.theta1, psi.L1, psi.delta1, psi.L1 - geom.coil_offset1);
  const Pose<Scalar> seg2 =
      geom.coil_offset2 == Scalar(0)
          ? segment_fk(psi.theta2, psi.L2, psi.delta2)
          : segment_point_fk(psi.theta2, psi.L2, psi.delta2, psi.L2 - geom.coil_offset2);
  out.catheter = seg1 * translate_z(geom.Ln) * seg2;
  return out;
}

}  // namespace ccr
