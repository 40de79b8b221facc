#include "ccr/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "ccr/errors.hpp"

namespace ccr {

void validate(const PathSpec& spec) {
  if (!(spec.radius > 0)) throw std::out_of_range("path: radius must be > 0");
  if (spec.n_points < 1) throw std::out_of_range("path: n_points must be >= 1");
  if (!(std::abs(spec.normal.norm() - 1) < 1e-9)) throw std::out_of_range("path: normal must be a unit vector");
  if (!spec.center.allFinite() || !std::isfinite(spec.phase)) throw std::invalid_argument("path: non-finite field");
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> plane_basis(const Eigen::Vector3d& normal) {
  // Project whichever of e_x / e_y is further from the normal.
  const Eigen::Vector3d seed = std::abs(normal.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d u = (seed - seed.dot(normal) * normal).normalized();
  return {u, normal.cross(u)};
}

std::vector<Eigen::Vector3d> generate_path(const PathSpec& spec) {
  validate(spec);
  const auto [u, v] = plane_basis(spec.normal);
  const double sign = spec.direction == PathDirection::ccw ? 1.0 : -1.0;
  std::vector<Eigen::Vector3d> out;
  out.reserve(spec.n_points);
  for (int k = 0; k < spec.n_points; ++k) {
    const double a = spec.phase + sign * 2 * std::numbers::pi * k / spec.n_points;
    out.push_back(spec.center + spec.radius * (std::cos(a) * u + std::sin(a) * v));
  }
  return out;
}

ErrorSplit decompose_error(const Eigen::Vector3d& error, const Eigen::Vector3d& normal) {
  const double along = error.dot(normal);
  return {std::abs(along), (error - along * normal).norm()};
}

namespace {

Aggregate aggregate(const std::vector<WaypointReport>& w, double WaypointReport::*field) {
  Aggregate a;
  for (const auto& r : w) {
    a.mean += r.*field;
    a.max = std::max(a.max, r.*field);
  }
  if (!w.empty()) a.mean /= static_cast<double>(w.size());
  return a;
}

}  // namespace

PathReport summarize(std::span<const CycleLog> logs, const Eigen::Vector3d& path_normal, ControlScheme scheme) {
  PathReport report;
  report.scheme = scheme;
  std::map<std::size_t, std::size_t> slot;  // waypoint -> position in report
  std::vector<int> reads;
  for (const CycleLog& log : logs) {
    auto [it, inserted] = slot.try_emplace(log.waypoint, report.waypoints.size());
    if (inserted) {
      report.waypoints.emplace_back();
      reads.push_back(0);
    }
    WaypointReport& w = report.waypoints[it->second];
    ++reads[it->second];
    const Eigen::Vector3d error = log.target - log.measured_tip;
    const ErrorSplit split = decompose_error(error, path_normal);
    w.index = log.waypoint;
    w.target = log.target;
    w.tip = log.measured_tip;
    w.error = error.norm();
    w.in_plane = split.in_plane;
    w.out_of_plane = split.out_of_plane;
    w.model_error = (log.model_tip - log.measured_tip).norm();
    w.converged = log.converged;
  }
  // Every cycle but the last for a target ends in a command.
  for (std::size_t i = 0; i < report.waypoints.size(); ++i) {
    report.waypoints[i].cycles = reads[i] - 1;
    report.converged += report.waypoints[i].converged ? 1 : 0;
  }
  report.error = aggregate(report.waypoints, &WaypointReport::error);
  report.in_plane = aggregate(report.waypoints, &WaypointReport::in_plane);
  report.out_of_plane = aggregate(report.waypoints, &WaypointReport::out_of_plane);
  report.model_error = aggregate(report.waypoints, &WaypointReport::model_error);
  for (const auto& w : report.waypoints) {
    report.cycles.mean += w.cycles;
    report.cycles.max = std::max<double>(report.cycles.max, w.cycles);
  }
  if (!report.waypoints.empty()) report.cycles.mean /= static_cast<double>(report.waypoints.size());
  return report;
}

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  cfg.plant = PlantConfig::mismatched(cfg.model.params, cfg.model.geom, cfg.model.limits);
  return cfg;
}

std::vector<SchemeRun> run_experiment(const ExperimentConfig& cfg, std::vector<CycleLog>* partial) {
  const std::vector<Eigen::Vector3d> waypoints = generate_path(cfg.path);
  std::vector<SchemeRun> runs;
  for (ControlScheme scheme : cfg.schemes) {
    ControlConfig control = cfg.control;
    control.scheme = scheme;
    SimulatedPlant plant(cfg.plant, cfg.initial_q);
    Controller controller(control, cfg.model, cfg.initial_q, cfg.weights, cfg.fit);
    try {
      controller.follow_path(waypoints, plant);
    } catch (const PlantFault&) {
      if (partial) *partial = controller.logs();
      throw;
    }
    SchemeRun run;
    run.logs = controller.logs();
    run.report = summarize(run.logs, cfg.path.normal, scheme);
    runs.push_back(std::move(run));
  }
  return runs;
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

namespace {

// Rounded to the same 9 significant digits as the CSV files.
double round9(double value) { return std::strtod(format_number(value).c_str(), nullptr); }

nlohmann::ordered_json aggregate_json(const Aggregate& a) {
  return {{"mean", round9(a.mean)}, {"max", round9(a.max)}};
}

nlohmann::ordered_json vec_json(const Eigen::Vector3d& v) { return {round9(v.x()), round9(v.y()), round9(v.z())}; }

void write_row(std::ostream& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
}

std::string num(double v) { return format_number(v); }

}  // namespace

std::string report_json(const ExperimentConfig& cfg, std::span<const SchemeRun> runs) {
  nlohmann::ordered_json root;
  root["seed"] = cfg.plant.rng_seed;
  root["path"] = {{"center", vec_json(cfg.path.center)},
                  {"normal", vec_json(cfg.path.normal)},
                  {"radius", round9(cfg.path.radius)},
                  {"n_points", cfg.path.n_points},
                  {"direction", cfg.path.direction == PathDirection::ccw ? "ccw" : "cw"}};
  root["control"] = {{"alpha", round9(cfg.control.alpha)},
                     {"lambda", round9(cfg.control.lambda)},
                     {"convergence_threshold", round9(cfg.control.convergence_threshold)},
                     {"max_cycles_per_target", cfg.control.max_cycles_per_target}};
  nlohmann::ordered_json schemes = nlohmann::ordered_json::object();
  for (const SchemeRun& run : runs) {
    const PathReport& r = run.report;
    schemes[to_string(r.scheme)] = {{"waypoints", r.waypoints.size()},
                                   {"converged", r.converged},
                                   {"error", aggregate_json(r.error)},
                                   {"in_plane", aggregate_json(r.in_plane)},
                                   {"out_of_plane", aggregate_json(r.out_of_plane)},
                                   {"model_error", aggregate_json(r.model_error)},
                                   {"cycles", aggregate_json(r.cycles)}};
  }
  root["schemes"] = schemes;
  return root.dump(2) + "\n";
}

void write_cycles_csv(const std::filesystem::path& file, std::span<const SchemeRun> runs) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "scheme,waypoint,cycle,target_x,target_y,target_z,tip_x,tip_y,tip_z,model_x,model_y,model_z,"
         "theta1,L1,delta1,theta2,L2,delta2,q_delta1,q_beta1,q_gamma1,q_delta2,q_beta2,q_gamma2,"
         "converged,saturated,fit_fallback\n";
  for (const SchemeRun& run : runs) {
    for (const CycleLog& c : run.logs) {
      const auto& t = c.target;
      const auto& m = c.measured_tip;
      const auto& p = c.model_tip;
      const Vector6<double> psi = c.psi.vector();
      const Vector6<double> q = c.q.vector();
      write_row(out, {to_string(run.report.scheme), std::to_string(c.waypoint), std::to_string(c.cycle), num(t.x()),
                      num(t.y()), num(t.z()), num(m.x()), num(m.y()), num(m.z()), num(p.x()), num(p.y()), num(p.z()),
                      num(psi(0)), num(psi(1)), num(psi(2)), num(psi(3)), num(psi(4)), num(psi(5)), num(q(0)),
                      num(q(1)), num(q(2)), num(q(3)), num(q(4)), num(q(5)), c.converged ? "1" : "0",
                      c.saturated ? "1" : "0", c.fit_fallback ? "1" : "0"});
    }
  }
}

void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, std::span<const SchemeRun> runs) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
    out << report_json(cfg, runs);
  }
  {
    std::ofstream out(dir / "waypoints.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "waypoints.csv").string());
    out << "scheme,waypoint,target_x,target_y,target_z,tip_x,tip_y,tip_z,error,in_plane,out_of_plane,"
           "model_error,cycles,converged\n";
    for (const SchemeRun& run : runs) {
      for (const WaypointReport& w : run.report.waypoints) {
        write_row(out, {to_string(run.report.scheme), std::to_string(w.index), num(w.target.x()), num(w.target.y()),
                        num(w.target.z()), num(w.tip.x()), num(w.tip.y()), num(w.tip.z()), num(w.error),
                        num(w.in_plane), num(w.out_of_plane), num(w.model_error), std::to_string(w.cycles),
                        w.converged ? "1" : "0"});
      }
    }
  }
  write_cycles_csv(dir / "cycles.csv", runs);
}

}  // namespace ccr
