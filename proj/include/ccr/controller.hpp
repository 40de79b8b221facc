#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccr/jacobians.hpp"
#include "ccr/plant.hpp"
#include "ccr/shape_estimator.hpp"

namespace ccr {

enum class ControlScheme {
  open_loop,        ///< feedback and shape both predicted from the commanded q
  closed_loop,      ///< sensed tip, shape predicted from q
  closed_loop_fit,  ///< sensed tip, shape fitted to both coils every cycle
};

std::string to_string(ControlScheme scheme);
std::optional<ControlScheme> parse_scheme(const std::string& name);

/// Largest per-cycle change of each actuator.
struct RateLimits {
  double delta = 0.3;  ///< rad
  double beta = 5.0;   ///< mm
  double gamma = 0.2;  ///< rad

  Vector6<double> vector() const {
    Vector6<double> v;
    v << delta, beta, gamma, delta, beta, gamma;
    return v;
  }
};

struct ControlConfig {
  double alpha = 0.5;
  double lambda = 1e-2;
  double convergence_threshold = 1.0;  ///< mm
  int max_cycles_per_target = 20;
  ControlScheme scheme = ControlScheme::closed_loop_fit;
  RateLimits rate_limits;
};

void validate(const ControlConfig& cfg);

/// The controller's beliefs about the robot.
struct RobotModel {
  ActuationParamsd params;
  ActuationLimitsd limits;
  RobotGeometryd geom;                      ///< Ln is overwritten from q every cycle
  Posed tracker_to_base = Posed::Identity();  ///< assumed registration
};

struct StepResult {
  Vector6<double> dq = Vector6<double>::Zero();  ///< after rate limiting
  ActuationQd q_next;
  bool rate_limited = false;
  bool saturated = false;  ///< some component of q_next was clipped to a limit
};

/**
 * One resolved-rates update dq = alpha J^+ (target - tip_feedback), with J
 * the damped inverse of the task Jacobian at (psi, q). dq is scaled down as a
 * whole when any component exceeds its rate limit; q + dq is then clipped to
 * the actuator limits.
 */
StepResult resolved_rates_step(const Eigen::Vector3d& target, const Eigen::Vector3d& tip_feedback,
                               const ConfigPsid& psi, const ActuationQd& q, const ControlConfig& cfg,
                               const RobotModel& model);

struct CycleLog {
  std::size_t waypoint = 0;
  int cycle = 0;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  Eigen::Vector3d measured_tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d model_tip = Eigen::Vector3d::Zero();
  ConfigPsid psi;
  ActuationQd q;  ///< command in force when the coils were read
  bool converged = false;
  bool saturated = false;
  bool fit_fallback = false;
};

struct TrackResult {
  bool converged = false;
  int cycles_used = 0;  ///< commands sent for this target
};

/**
 * Synchronous control loop: read coils, update the shape estimate, check
 * convergence, step, command. Owns the estimator state; a single instance
 * drives one plant.
 */
class Controller {
 public:
  using LogSink = std::function<void(const CycleLog&)>;

  Controller(ControlConfig cfg, RobotModel model, const ActuationQd& initial_q, FitWeights weights = {},
             FitOptions fit_options = {});

  /// Runs until the tip is within the threshold or the cycle budget is spent.
  /// PlantFault propagates; logs() then holds every completed cycle.
  TrackResult track_target(const Eigen::Vector3d& target, Plant& plant, std::size_t waypoint = 0);

  /// Tracks each waypoint in order, carrying q and the shape estimate across.
  std::vector<TrackResult> follow_path(std::span<const Eigen::Vector3d> waypoints, Plant& plant);

  void set_log_sink(LogSink sink) { sink_ = std::move(sink); }
  const std::vector<CycleLog>& logs() const { return logs_; }
  const ActuationQd& q() const { return q_; }
  const ControlConfig& config() const { return cfg_; }

 private:
  void record(const CycleLog& log);

  ControlConfig cfg_;
  RobotModel model_;
  ActuationQd q_;
  ShapeEstimator estimator_;
  std::vector<CycleLog> logs_;
  LogSink sink_;
};

}  // namespace ccr
