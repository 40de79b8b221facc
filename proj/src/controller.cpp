#include "ccr/controller.hpp"

#include <algorithm>
#include <stdexcept>

namespace ccr {

std::string to_string(ControlScheme scheme) {
  switch (scheme) {
    case ControlScheme::open_loop:
      return "open_loop";
    case ControlScheme::closed_loop:
      return "closed_loop";
    case ControlScheme::closed_loop_fit:
      return "closed_loop_fit";
  }
  return "unknown";
}

std::optional<ControlScheme> parse_scheme(const std::string& name) {
  for (auto s : {ControlScheme::open_loop, ControlScheme::closed_loop, ControlScheme::closed_loop_fit}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

void validate(const ControlConfig& cfg) {
  if (!(cfg.alpha > 0) || cfg.alpha > 1) throw std::out_of_range("control: alpha must lie in (0, 1]");
  if (!(cfg.lambda >= 0)) throw std::out_of_range("control: lambda must be >= 0");
  if (!(cfg.convergence_threshold > 0)) throw std::out_of_range("control: threshold must be > 0");
  if (cfg.max_cycles_per_target < 1) throw std::out_of_range("control: max_cycles_per_target must be >= 1");
  if (!((cfg.rate_limits.vector().array() > 0).all())) throw std::out_of_range("control: rate limits must be > 0");
}

StepResult resolved_rates_step(const Eigen::Vector3d& target, const Eigen::Vector3d& tip_feedback,
                               const ConfigPsid& psi, const ActuationQd& q, const ControlConfig& cfg,
                               const RobotModel& model) {
  const Eigen::Vector3d error = target - tip_feedback;
  if (!error.allFinite()) throw std::invalid_argument("resolved_rates_step: non-finite tip error");

  const RobotGeometryd geom = actuated_geometry(q, model.params, model.geom);
  const ControlJacobian<double> cj = control_jacobian(psi, q, model.params, geom);

  StepResult out;
  out.dq = cfg.alpha * (damped_pinv(cj.J, cfg.lambda) * error);

  const Vector6<double> limits = cfg.rate_limits.vector();
  const double excess = (out.dq.cwiseAbs().array() / limits.array()).maxCoeff();
  if (excess > 1) {
    out.dq /= excess;
    out.rate_limited = true;
  }

  ClippedQ<double> next = clip_to_limits(ActuationQd::from_vector(q.vector() + out.dq), model.limits);
  // Keep the straight connector non-negative when it follows relative insertion.
  if (model.params.insertion == InsertionModel::coupled) {
    const double min_beta2 = next.q.beta1 - model.params.cn;
    if (next.q.beta2 < min_beta2) {
      next.q.beta2 = std::min(min_beta2, model.limits.beta_max);
      next.saturated = true;
    }
  }
  out.q_next = next.q;
  out.saturated = next.saturated;
  return out;
}

Controller::Controller(ControlConfig cfg, RobotModel model, const ActuationQd& initial_q, FitWeights weights,
                       FitOptions fit_options)
    : cfg_(cfg),
      model_(std::move(model)),
      q_(initial_q),
      estimator_(actuation_to_shape(initial_q, model_.params, model_.limits.theta_max), weights, ShapeBounds{},
                 fit_options) {
  validate(cfg_);
  validate(model_.params);
}

void Controller::record(const CycleLog& log) {
  logs_.push_back(log);
  if (sink_) sink_(log);
}

TrackResult Controller::track_target(const Eigen::Vector3d& target, Plant& plant, std::size_t waypoint) {
  TrackResult result;
  bool saturated = false;

  for (int cycle = 0;; ++cycle) {
    CoilReadings readings = plant.read_coils();
    for (CoilReading* c : {&readings.sheath, &readings.catheter}) {
      c->position = model_.tracker_to_base.rotation * c->position + model_.tracker_to_base.position;
      c->tangent = (model_.tracker_to_base.rotation * c->tangent).normalized();
    }

    const RobotGeometryd geom = actuated_geometry(q_, model_.params, model_.geom);
    CycleLog log;
    log.waypoint = waypoint;
    log.cycle = cycle;
    log.target = target;
    log.measured_tip = readings.catheter.position;
    log.q = q_;
    log.saturated = saturated;

    const ConfigPsid predicted = actuation_to_shape(q_, model_.params, model_.limits.theta_max);
    Eigen::Vector3d feedback;
    if (cfg_.scheme == ControlScheme::closed_loop_fit) {
      const std::size_t before = estimator_.fallback_count();
      // The actuation Jacobian assumes the commanded parameterization of each arc.
      log.psi = align_bend_planes(estimator_.update(readings, geom), predicted);
      log.fit_fallback = estimator_.fallback_count() != before;
      log.model_tip = coil_fk(log.psi, geom).catheter.position;
      feedback = log.measured_tip;
    } else {
      log.psi = predicted;
      log.model_tip = coil_fk(log.psi, geom).catheter.position;
      feedback = cfg_.scheme == ControlScheme::open_loop ? log.model_tip : log.measured_tip;
    }

    log.converged = (target - feedback).norm() < cfg_.convergence_threshold;
    record(log);
    if (log.converged) {
      result.converged = true;
      break;
    }
    if (cycle >= cfg_.max_cycles_per_target) break;

    const StepResult step = resolved_rates_step(target, feedback, log.psi, q_, cfg_, model_);
    plant.command(step.q_next);
    q_ = step.q_next;
    saturated = step.saturated;
    ++result.cycles_used;
  }
  return result;
}

std::vector<TrackResult> Controller::follow_path(std::span<const Eigen::Vector3d> waypoints, Plant& plant) {
  if (waypoints.empty()) throw std::invalid_argument("follow_path: empty path");
  std::vector<TrackResult> out;
  out.reserve(waypoints.size());
  for (std::size_t i = 0; i < waypoints.size(); ++i) out.push_back(track_target(waypoints[i], plant, i));
  return out;
}

}  // namespace ccr
