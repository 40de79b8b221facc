#pragma once

#include <cstddef>
#include <numbers>

#include "ccr/kinematics.hpp"

namespace ccr {

enum class CoilId { sheath, catheter };

/// 5-DoF tracking coil sample: position [mm] and unit tangent, no roll.
struct CoilReading {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d tangent = Eigen::Vector3d::UnitZ();
  CoilId coil = CoilId::catheter;
  double timestamp = 0;  ///< s
};

struct CoilReadings {
  CoilReading sheath;
  CoilReading catheter;
};

/// Objective weights. Position terms in mm^-2, tangent terms dimensionless.
struct FitWeights {
  double position_sheath = 1;
  double tangent_sheath = 25;
  double position_catheter = 1;
  double tangent_catheter = 25;
};

/// Box on the fitted shape; bend directions are left free and wrapped.
struct ShapeBounds {
  double theta_max = std::numbers::pi;
  double L_min = 1;
  double L_max = 250;
};

struct FitOptions {
  int max_iterations = 50;
  double step_tolerance = 1e-10;
  double residual_tolerance = 1e-8;
  /// A fit whose residual exceeds this is not trusted (mm-equivalent).
  double acceptance_threshold = 5.0;
  double initial_damping = 1e-3;
};

struct FitResult {
  ConfigPsid psi;
  double residual = 0;  ///< sqrt of the weighted sum of squares, mm-equivalent
  bool converged = false;
  int iterations = 0;
};

/**
 * Fits Psi to both coil readings by minimising
 *   sum_i wp_i |p_i_meas - p_i(Psi)|^2 + wt_i |t_i_meas - t_i(Psi)|^2
 * with a box-constrained Levenberg-Marquardt iteration warm-started at
 * `initial`. Accepted steps never increase the objective. Numeric trouble
 * is reported through `converged == false` with the best iterate, never by
 * throwing; invalid arguments (non-unit tangents, bad weights) do throw.
 */
FitResult fit_shape(const CoilReadings& readings, const ConfigPsid& initial, const FitWeights& weights,
                    const RobotGeometryd& geom, const ShapeBounds& bounds = {}, const FitOptions& options = {});

/// Weighted residual vector (12) of a candidate shape; exposed for diagnostics and tests.
Eigen::Matrix<double, 12, 1> fit_residual(const CoilReadings& readings, const ConfigPsid& psi,
                                          const FitWeights& weights, const RobotGeometryd& geom);

/// Hold-last-good: keep `current` only if it converged below the threshold.
ConfigPsid fallback_policy(const FitResult& current, const ConfigPsid& previous, double residual_threshold);

/**
 * Stateful wrapper used by the control loop: warm-starts every fit from the
 * last accepted estimate and falls back to it on failure.
 */
class ShapeEstimator {
 public:
  ShapeEstimator(const ConfigPsid& initial, FitWeights weights = {}, ShapeBounds bounds = {}, FitOptions options = {});

  /// Fits the readings and returns the accepted estimate.
  ConfigPsid update(const CoilReadings& readings, const RobotGeometryd& geom);

  void reset(const ConfigPsid& psi) { estimate_ = psi; }
  const ConfigPsid& estimate() const { return estimate_; }
  const FitResult& last_fit() const { return last_fit_; }
  std::size_t fallback_count() const { return fallbacks_; }

 private:
  ConfigPsid estimate_;
  FitWeights weights_;
  ShapeBounds bounds_;
  FitOptions options_;
  FitResult last_fit_;
  std::size_t fallbacks_ = 0;
};

}  // namespace ccr
