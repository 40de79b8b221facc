#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "ccr/plant.hpp"

namespace ccr {

struct PlantConfig {
  ActuationParamsd true_params;
  ActuationLimitsd limits;
  RobotGeometryd true_geom;
  double backlash_width = 0;        ///< rad, per rotary axis (delta1, gamma1, delta2, gamma2)
  double sensor_noise_sigma_pos = 0;     ///< mm, isotropic
  double sensor_noise_sigma_tangent = 0; ///< rad
  double curvature_distortion = 0;  ///< d in (-1, 1): sub-arc curvature ratio (1+d)/(1-d)
  Eigen::Vector3d registration_translation = Eigen::Vector3d::Zero();  ///< mm
  Eigen::Vector3d registration_rotation = Eigen::Vector3d::Zero();     ///< rotation vector, rad
  std::uint64_t rng_seed = 1;

  /// Plant identical to the model: no mismatch, no noise.
  static PlantConfig matched(const ActuationParamsd& model, const RobotGeometryd& geom,
                             const ActuationLimitsd& limits = {});

  /// Default mismatch profile: k2 off by -8%, k1, kc, b1, b2 and cn by +10%,
  /// 0.04 rad backlash, 0.2 mm / 0.01 rad sensor noise, 0.15 curvature distortion.
  static PlantConfig mismatched(const ActuationParamsd& model, const RobotGeometryd& geom,
                                const ActuationLimitsd& limits = {});
};

void validate(const PlantConfig& cfg);

/// Tracker-from-base transform for a given registration error.
Posed base_registration(const Eigen::Vector3d& error_translation, const Eigen::Vector3d& error_rotation);

/**
 * Frame at arc length s along a segment bent as two equal-length sub-arcs
 * with bend angles theta (1 + d) / 2 and theta (1 - d) / 2. Total length and
 * total bend match the constant-curvature segment (theta, L, delta).
 */
Posed distorted_segment_fk(double theta, double L, double delta, double distortion, double s);

/// Rate-independent play (backlash) operator on one axis.
class PlayOperator {
 public:
  PlayOperator(double width, double initial) : width_(width), output_(initial) {}
  double update(double input) {
    output_ = std::clamp(output_, input - width_, input + width_);
    return output_;
  }
  double output() const { return output_; }

 private:
  double width_;
  double output_;
};

struct PlantState {
  std::vector<ActuationQd> commanded;  ///< every accepted command, in order
  ActuationQd effective;               ///< after backlash
  ConfigPsid true_psi;                 ///< constant-curvature shape before distortion
};

/**
 * Ground-truth robot for closed-loop experiments. Commands pass through
 * backlash on the rotary axes and the plant's own actuation parameters; the
 * resulting arcs are distorted before the coils are sampled with noise in a
 * mis-registered tracker frame.
 */
class SimulatedPlant final : public Plant {
 public:
  SimulatedPlant(PlantConfig cfg, const ActuationQd& initial);

  void command(const ActuationQd& q) override;
  CoilReadings read_coils() override;

  /// Noise-free coil frames in the robot base frame (simulation only).
  CoilPoses<double> true_coil_poses() const;
  const PlantState& state() const { return state_; }
  const PlantConfig& config() const { return cfg_; }

 private:
  ConfigPsid shape_for(const ActuationQd& effective) const;

  PlantConfig cfg_;
  PlantState state_;
  PlayOperator play_[4];
  Posed registration_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t reads_ = 0;
};

}  // namespace ccr
