#pragma once

// Reference computations used only by the tests. Nothing here calls the
// closed-form kinematics or Jacobians it is used to check.

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Core>

namespace oracle {

struct Frame {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

inline Eigen::Matrix3d hat(const Eigen::Vector3d& v) {
  Eigen::Matrix3d S;
  S << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return S;
}

/**
 * RK4 integration of the backbone frame ODE
 *   dR/ds = R hat(u),  dp/ds = R e_z,
 * with constant body curvature u = (theta / L) * [-sin(delta), cos(delta), 0],
 * from s = 0 to s = s_end, starting at `start`.
 */
inline Frame integrate_arc(double theta, double L, double delta, double s_end, int steps,
                           Frame start = {}) {
  const double kappa = theta / L;
  const Eigen::Matrix3d U = hat(kappa * Eigen::Vector3d(-std::sin(delta), std::cos(delta), 0.0));
  const Eigen::Vector3d ez = Eigen::Vector3d::UnitZ();
  const double h = s_end / steps;
  Frame f = start;
  for (int i = 0; i < steps; ++i) {
    const Eigen::Matrix3d k1R = f.R * U;
    const Eigen::Vector3d k1p = f.R * ez;
    const Eigen::Matrix3d R2 = f.R + 0.5 * h * k1R;
    const Eigen::Matrix3d k2R = R2 * U;
    const Eigen::Vector3d k2p = R2 * ez;
    const Eigen::Matrix3d R3 = f.R + 0.5 * h * k2R;
    const Eigen::Matrix3d k3R = R3 * U;
    const Eigen::Vector3d k3p = R3 * ez;
    const Eigen::Matrix3d R4 = f.R + h * k3R;
    const Eigen::Matrix3d k4R = R4 * U;
    const Eigen::Vector3d k4p = R4 * ez;
    f.R += h / 6.0 * (k1R + 2 * k2R + 2 * k3R + k4R);
    f.p += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
  }
  return f;
}

/// Straight run of length d along the current tangent.
inline Frame advance_straight(Frame f, double d) {
  f.p += d * f.R.col(2);
  return f;
}

/**
 * Length of a tendon routed at radius r, angle tendon_angle in the cross
 * section, along an arc (theta, L, delta); polyline through `steps` samples of
 * the integrated backbone.
 */
inline double tendon_length(double theta, double L, double delta, double r, double tendon_angle, int steps) {
  const Eigen::Vector3d offset(r * std::cos(tendon_angle), r * std::sin(tendon_angle), 0.0);
  const double h = L / steps;
  Frame f;
  Eigen::Vector3d prev = f.p + f.R * offset;
  double length = 0.0;
  for (int i = 0; i < steps; ++i) {
    f = integrate_arc(theta, L, delta, h, 1, f);
    const Eigen::Vector3d cur = f.p + f.R * offset;
    length += (cur - prev).norm();
    prev = cur;
  }
  return length;
}

/// Central differences of f: R^n -> R^m at x.
inline Eigen::MatrixXd central_difference(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return J;
}

/// max |A - B| / max(|B|_max, floor): relative to the matrix scale.
inline double relative_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double floor = 1.0) {
  return (A - B).cwiseAbs().maxCoeff() / std::max(B.cwiseAbs().maxCoeff(), floor);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Bend angle with |theta| in [lo, hi] and random sign.
inline double signed_uniform(std::mt19937_64& rng, double lo, double hi) {
  const double m = uniform(rng, lo, hi);
  return uniform(rng, 0.0, 1.0) < 0.5 ? -m : m;
}

}  // namespace oracle
