#include "ccr/shape_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "ccr/jacobians.hpp"

namespace ccr {

namespace {

using Residual = Eigen::Matrix<double, 12, 1>;
using ResidualJacobian = Eigen::Matrix<double, 12, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct Sqrt4 {
  double p1, t1, p2, t2;
};

Sqrt4 sqrt_weights(const FitWeights& w) {
  return {std::sqrt(w.position_sheath), std::sqrt(w.tangent_sheath), std::sqrt(w.position_catheter),
          std::sqrt(w.tangent_catheter)};
}

Residual residual_of(const CoilReadings& r, const ConfigPsid& psi, const Sqrt4& s, const RobotGeometryd& geom) {
  const auto coils = coil_fk(psi, geom);
  Residual out;
  out << s.p1 * (r.sheath.position - coils.sheath.position), s.t1 * (r.sheath.tangent - coils.sheath.tangent()),
      s.p2 * (r.catheter.position - coils.catheter.position),
      s.t2 * (r.catheter.tangent - coils.catheter.tangent());
  return out;
}

ResidualJacobian analytic_jacobian(const ConfigPsid& psi, const Sqrt4& s, const RobotGeometryd& geom) {
  const auto cj = coil_jacobians(psi, geom);
  ResidualJacobian J;
  J << -s.p1 * cj.sheath_position, -s.t1 * cj.sheath_tangent, -s.p2 * cj.catheter_position,
      -s.t2 * cj.catheter_tangent;
  return J;
}

ResidualJacobian numeric_jacobian(const CoilReadings& r, const ConfigPsid& psi, const Sqrt4& s,
                                  const RobotGeometryd& geom) {
  constexpr double h = 1e-6;
  ResidualJacobian J;
  const Vec6 x = psi.vector();
  for (int j = 0; j < 6; ++j) {
    Vec6 xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (residual_of(r, ConfigPsid::from_vector(xp), s, geom) -
                residual_of(r, ConfigPsid::from_vector(xm), s, geom)) /
               (2 * h);
  }
  return J;
}

struct Box {
  Vec6 lo, hi;
};

Box make_box(const ShapeBounds& b, const RobotGeometryd& geom) {
  const double inf = std::numeric_limits<double>::infinity();
  // Open interval on theta; keep the coil inside its segment.
  const double tmax = std::nextafter(b.theta_max, 0.0);
  const double L1min = std::max(b.L_min, geom.coil_offset1 + 1e-3);
  const double L2min = std::max(b.L_min, geom.coil_offset2 + 1e-3);
  Box box;
  box.lo << -tmax, L1min, -inf, -tmax, L2min, -inf;
  box.hi << tmax, b.L_max, inf, tmax, b.L_max, inf;
  return box;
}

Vec6 project(const Vec6& x, const Box& box) {
  Vec6 y = x.cwiseMax(box.lo).cwiseMin(box.hi);
  y(2) = normalize_angle(y(2));
  y(5) = normalize_angle(y(5));
  return y;
}

bool finite(const Residual& r) { return r.allFinite(); }

}  // namespace

Eigen::Matrix<double, 12, 1> fit_residual(const CoilReadings& readings, const ConfigPsid& psi,
                                          const FitWeights& weights, const RobotGeometryd& geom) {
  return residual_of(readings, psi, sqrt_weights(weights), geom);
}

FitResult fit_shape(const CoilReadings& readings, const ConfigPsid& initial, const FitWeights& weights,
                    const RobotGeometryd& geom, const ShapeBounds& bounds, const FitOptions& options) {
  for (const CoilReading* c : {&readings.sheath, &readings.catheter}) {
    if (!c->position.allFinite() || std::abs(c->tangent.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("fit_shape: readings need finite positions and unit tangents");
    }
  }
  if (!(weights.position_sheath > 0) || !(weights.position_catheter > 0) || !(weights.tangent_sheath >= 0) ||
      !(weights.tangent_catheter >= 0)) {
    throw std::invalid_argument("fit_shape: weights must be positive");
  }
  validate(geom);
  validate(initial, bounds.theta_max);

  const Sqrt4 sw = sqrt_weights(weights);
  const Box box = make_box(bounds, geom);

  Vec6 x = project(initial.vector(), box);
  Residual r = residual_of(readings, ConfigPsid::from_vector(x), sw, geom);
  FitResult result{ConfigPsid::from_vector(x), r.norm(), false, 0};
  if (!finite(r)) return result;

  double cost = r.squaredNorm();
  bool stationary = false;
  double mu = -1;

  while (result.iterations < options.max_iterations) {
    if (std::sqrt(cost) < options.residual_tolerance) {
      stationary = true;
      break;
    }
    const ConfigPsid psi = ConfigPsid::from_vector(x);
    ResidualJacobian J = analytic_jacobian(psi, sw, geom);
    if (!J.allFinite()) J = numeric_jacobian(readings, psi, sw, geom);
    if (!J.allFinite()) break;

    const Eigen::Matrix<double, 6, 6> A = J.transpose() * J;
    const Vec6 g = J.transpose() * r;
    Vec6 scale = A.diagonal();
    const double floor = std::max(1e-12, 1e-9 * scale.maxCoeff());
    scale = scale.cwiseMax(floor);
    if (mu < 0) mu = options.initial_damping;

    ++result.iterations;
    Eigen::Matrix<double, 6, 6> H = A;
    H.diagonal() += mu * scale;
    const Vec6 step = H.ldlt().solve(-g);
    if (!step.allFinite()) break;

    const Vec6 x_new = project(x + step, box);
    const Residual r_new = residual_of(readings, ConfigPsid::from_vector(x_new), sw, geom);
    const double cost_new = finite(r_new) ? r_new.squaredNorm() : std::numeric_limits<double>::infinity();

    if (cost_new < cost) {
      const double moved = (x_new - x).norm();
      const double gain = cost - cost_new;
      x = x_new;
      r = r_new;
      cost = cost_new;
      mu = std::max(mu / 3.0, 1e-12);
      if (moved <= options.step_tolerance * (x.norm() + options.step_tolerance) || gain <= 1e-14 * cost) {
        stationary = true;
        break;
      }
    } else {
      mu *= 4.0;
      if (mu > 1e12) {
        // No descent direction left at this scale: x is a local minimum up to precision.
        stationary = g.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + std::sqrt(cost));
        break;
      }
    }
  }

  result.psi = ConfigPsid::from_vector(x);
  result.residual = std::sqrt(cost);
  result.converged = stationary && result.residual <= options.acceptance_threshold;
  return result;
}

ConfigPsid fallback_policy(const FitResult& current, const ConfigPsid& previous, double residual_threshold) {
  if (current.converged && current.residual <= residual_threshold) return current.psi;
  return previous;
}

ShapeEstimator::ShapeEstimator(const ConfigPsid& initial, FitWeights weights, ShapeBounds bounds, FitOptions options)
    : estimate_(initial), weights_(weights), bounds_(bounds), options_(options) {
  last_fit_.psi = initial;
}

ConfigPsid ShapeEstimator::update(const CoilReadings& readings, const RobotGeometryd& geom) {
  last_fit_ = fit_shape(readings, estimate_, weights_, geom, bounds_, options_);
  const ConfigPsid accepted = fallback_policy(last_fit_, estimate_, options_.acceptance_threshold);
  if (!last_fit_.converged || last_fit_.residual > options_.acceptance_threshold) ++fallbacks_;
  estimate_ = accepted;
  return estimate_;
}

}  // namespace ccr
