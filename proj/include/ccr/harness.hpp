#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ccr/controller.hpp"
#include "ccr/plant_sim.hpp"

namespace ccr {

enum class PathDirection { ccw, cw };

/// Circle in 3-D; ccw means counter-clockwise seen from the tip of `normal`.
struct PathSpec {
  Eigen::Vector3d center{0, 0, 95};
  Eigen::Vector3d normal{0.5, 0, 0.8660254037844386};  // 30 deg from z towards x
  double radius = 20;
  int n_points = 72;
  PathDirection direction = PathDirection::ccw;
  double phase = 0;  ///< rad, angle of the first point from the in-plane reference axis
};

void validate(const PathSpec& spec);

/// In-plane reference axes (u, v) with u x v = normal.
std::pair<Eigen::Vector3d, Eigen::Vector3d> plane_basis(const Eigen::Vector3d& normal);

std::vector<Eigen::Vector3d> generate_path(const PathSpec& spec);

struct ErrorSplit {
  double out_of_plane = 0;
  double in_plane = 0;
};

ErrorSplit decompose_error(const Eigen::Vector3d& error, const Eigen::Vector3d& normal);

struct WaypointReport {
  std::size_t index = 0;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  Eigen::Vector3d tip = Eigen::Vector3d::Zero();  ///< last measured tip
  double error = 0;
  double in_plane = 0;
  double out_of_plane = 0;
  double model_error = 0;  ///< |model tip - measured tip| at the last cycle
  int cycles = 0;
  bool converged = false;
};

struct Aggregate {
  double mean = 0;
  double max = 0;
};

struct PathReport {
  ControlScheme scheme = ControlScheme::closed_loop_fit;
  std::vector<WaypointReport> waypoints;
  Aggregate error, in_plane, out_of_plane, model_error, cycles;
  std::size_t converged = 0;
};

/// Builds the report from raw cycle logs; the report depends on nothing else.
PathReport summarize(std::span<const CycleLog> logs, const Eigen::Vector3d& path_normal, ControlScheme scheme);

/// Everything needed to reproduce one experiment.
struct ExperimentConfig {
  RobotModel model;
  ActuationQd initial_q{-0.74, 6.50, 0.76, 1.54, 2.67, 2.12};  ///< tip on the default path's first waypoint
  PlantConfig plant;
  ControlConfig control;
  std::vector<ControlScheme> schemes{ControlScheme::open_loop, ControlScheme::closed_loop,
                                     ControlScheme::closed_loop_fit};
  FitWeights weights;
  FitOptions fit;
  PathSpec path;
  std::string output_dir = "out";
};

/// Defaults: model at nominal parameters, mismatched plant mismatch.
ExperimentConfig default_experiment();

/// Throws ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct SchemeRun {
  PathReport report;
  std::vector<CycleLog> logs;
};

/// Runs follow_path once per scheme, each on a fresh plant with the same seed.
/// PlantFault propagates; `partial` then holds the failed scheme's logs.
std::vector<SchemeRun> run_experiment(const ExperimentConfig& cfg, std::vector<CycleLog>* partial = nullptr);

/// report.json, waypoints.csv and cycles.csv in `dir` (created if missing).
void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, std::span<const SchemeRun> runs);
void write_cycles_csv(const std::filesystem::path& file, std::span<const SchemeRun> runs);

std::string report_json(const ExperimentConfig& cfg, std::span<const SchemeRun> runs);

/// Shortest decimal with 9 significant digits, as written to every output file.
std::string format_number(double value);

}  // namespace ccr
