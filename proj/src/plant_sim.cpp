#include "ccr/plant_sim.hpp"

#include <cmath>
#include <string>

#include "ccr/errors.hpp"

namespace ccr {

PlantConfig PlantConfig::matched(const ActuationParamsd& model, const RobotGeometryd& geom,
                                 const ActuationLimitsd& limits) {
  PlantConfig cfg;
  cfg.true_params = model;
  cfg.true_geom = geom;
  cfg.limits = limits;
  return cfg;
}

PlantConfig PlantConfig::mismatched(const ActuationParamsd& model, const RobotGeometryd& geom,
                                    const ActuationLimitsd& limits) {
  PlantConfig cfg = matched(model, geom, limits);
  cfg.true_params.k1 = model.k1 * 1.10;
  cfg.true_params.k2 = model.k2 * 0.92;
  cfg.true_params.kc = model.kc * 1.10;
  cfg.true_params.b1 = model.b1 * 1.10;
  cfg.true_params.b2 = model.b2 * 1.10;
  cfg.true_params.cn = model.cn * 1.10;
  cfg.backlash_width = 0.04;
  cfg.sensor_noise_sigma_pos = 0.2;
  cfg.sensor_noise_sigma_tangent = 0.01;
  cfg.curvature_distortion = 0.15;
  return cfg;
}

void validate(const PlantConfig& cfg) {
  validate(cfg.true_params);
  validate(cfg.true_geom);
  if (!(cfg.backlash_width >= 0)) throw std::out_of_range("plant: backlash_width must be >= 0");
  if (!(cfg.sensor_noise_sigma_pos >= 0) || !(cfg.sensor_noise_sigma_tangent >= 0)) {
    throw std::out_of_range("plant: noise sigmas must be >= 0");
  }
  if (!(std::abs(cfg.curvature_distortion) < 1)) throw std::out_of_range("plant: |curvature_distortion| must be < 1");
}

Posed base_registration(const Eigen::Vector3d& error_translation, const Eigen::Vector3d& error_rotation) {
  return {rotation_from_vector(error_rotation), error_translation};
}

Posed distorted_segment_fk(double theta, double L, double delta, double distortion, double s) {
  if (!(s > 0) || s > L) throw std::invalid_argument("distorted_segment_fk: point outside the arc");
  const double half = L / 2;
  const double kappa = theta / L;
  const double kappa_a = kappa * (1 + distortion);
  const double kappa_b = kappa * (1 - distortion);
  if (s <= half) return segment_fk(kappa_a * s, s, delta);
  return segment_fk(kappa_a * half, half, delta) * segment_fk(kappa_b * (s - half), s - half, delta);
}

SimulatedPlant::SimulatedPlant(PlantConfig cfg, const ActuationQd& initial)
    : cfg_(std::move(cfg)),
      play_{{cfg_.backlash_width, initial.delta1},
            {cfg_.backlash_width, initial.gamma1},
            {cfg_.backlash_width, initial.delta2},
            {cfg_.backlash_width, initial.gamma2}},
      registration_(base_registration(cfg_.registration_translation, cfg_.registration_rotation)),
      rng_(cfg_.rng_seed) {
  validate(cfg_);
  if (!within_limits(initial, cfg_.limits)) throw PlantFault("initial command outside actuator limits");
  state_.effective = initial;
  state_.true_psi = shape_for(initial);
}

void SimulatedPlant::command(const ActuationQd& q) {
  if (!q.vector().allFinite()) throw PlantFault("non-finite command");
  if (!within_limits(q, cfg_.limits)) throw PlantFault("command outside actuator limits");
  PlayOperator play[4] = {play_[0], play_[1], play_[2], play_[3]};
  ActuationQd eff = q;
  eff.delta1 = play[0].update(q.delta1);
  eff.gamma1 = play[1].update(q.gamma1);
  eff.delta2 = play[2].update(q.delta2);
  eff.gamma2 = play[3].update(q.gamma2);
  const ConfigPsid psi = shape_for(eff);
  std::copy(std::begin(play), std::end(play), std::begin(play_));
  state_.commanded.push_back(q);
  state_.effective = eff;
  state_.true_psi = psi;
}

ConfigPsid SimulatedPlant::shape_for(const ActuationQd& effective) const {
  try {
    (void)insertion_length(effective, cfg_.true_params);
    return actuation_to_shape(effective, cfg_.true_params, cfg_.limits.theta_max);
  } catch (const std::out_of_range& e) {
    throw PlantFault(std::string("plant shape out of range: ") + e.what());
  }
}

CoilPoses<double> SimulatedPlant::true_coil_poses() const {
  const ConfigPsid& psi = state_.true_psi;
  const RobotGeometryd geom = actuated_geometry(state_.effective, cfg_.true_params, cfg_.true_geom);
  const double d = cfg_.curvature_distortion;
  const Posed seg1 = distorted_segment_fk(psi.theta1, psi.L1, psi.delta1, d, psi.L1);
  CoilPoses<double> out;
  out.sheath = distorted_segment_fk(psi.theta1, psi.L1, psi.delta1, d, psi.L1 - geom.coil_offset1);
  out.catheter = seg1 * translate_z(geom.Ln) *
                 distorted_segment_fk(psi.theta2, psi.L2, psi.delta2, d, psi.L2 - geom.coil_offset2);
  return out;
}

CoilReadings SimulatedPlant::read_coils() {
  const CoilPoses<double> truth = true_coil_poses();
  const double stamp = static_cast<double>(reads_++);

  auto sample = [&](const Posed& pose, CoilId id) {
    CoilReading r;
    r.coil = id;
    r.timestamp = stamp;
    const Posed tracked = registration_ * pose;
    const Eigen::Vector3d jitter(normal_(rng_), normal_(rng_), normal_(rng_));
    r.position = tracked.position + cfg_.sensor_noise_sigma_pos * jitter;

    const Eigen::Vector3d t = tracked.tangent();
    Eigen::Vector3d axis(normal_(rng_), normal_(rng_), normal_(rng_));
    const double angle = cfg_.sensor_noise_sigma_tangent * normal_(rng_);
    axis -= axis.dot(t) * t;
    Eigen::Vector3d tangent = t;
    if (axis.norm() > 1e-12 && angle != 0) tangent = Eigen::AngleAxisd(angle, axis.normalized()) * t;
    r.tangent = tangent.normalized();
    return r;
  };

  CoilReadings out;
  out.sheath = sample(truth.sheath, CoilId::sheath);
  out.catheter = sample(truth.catheter, CoilId::catheter);
  return out;
}

}  // namespace ccr
