// ccrsim: command-line front end for the catheter robot simulator.
//
// Exit codes: 0 success, 1 failed check or unexpected error, 2 bad config,
// arguments or input data, 3 plant fault.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccr/calibration.hpp"
#include "ccr/errors.hpp"
#include "ccr/harness.hpp"
#include "ccr/jacobians.hpp"

using namespace ccr;
using nlohmann::ordered_json;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitPlantFault = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load(const CommonOptions& opt) {
  ExperimentConfig cfg = opt.config.empty() ? default_experiment() : load_config(opt.config);
  if (opt.seed) cfg.plant.rng_seed = *opt.seed;
  return cfg;
}

ActuationQd pick_q(const std::vector<double>& given, const ExperimentConfig& cfg) {
  if (given.empty()) return cfg.initial_q;
  if (given.size() != 6) throw ConfigError("--q", "expected 6 values: delta1 beta1 gamma1 delta2 beta2 gamma2");
  return ActuationQd::from_vector(Vector6<double>(given.data()));
}

ordered_json vec(const Eigen::Ref<const Eigen::VectorXd>& v) { return std::vector<double>(v.begin(), v.end()); }

ordered_json psi_json(const ConfigPsid& psi) {
  return {{"theta1", psi.theta1}, {"L1", psi.L1}, {"delta1", psi.delta1},
          {"theta2", psi.theta2}, {"L2", psi.L2}, {"delta2", psi.delta2}};
}

ordered_json coil_json(const Posed& pose) {
  return {{"position", vec(pose.position)}, {"tangent", vec(pose.rotation.col(2))}};
}

ordered_json reading_json(const CoilReading& r) {
  return {{"position", vec(r.position)}, {"tangent", vec(r.tangent)}};
}

CoilReading read_coil(const nlohmann::json& j, const std::string& field, CoilId id) {
  CoilReading r;
  r.coil = id;
  try {
    const auto p = j.at(field).at("position").get<std::vector<double>>();
    const auto t = j.at(field).at("tangent").get<std::vector<double>>();
    if (p.size() != 3 || t.size() != 3) throw ConfigError(field, "expected 3-vectors");
    r.position = Eigen::Vector3d(p.data());
    r.tangent = Eigen::Vector3d(t.data());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(field, e.what());
  }
  if (!(r.tangent.norm() > 0)) throw ConfigError(field + ".tangent", "must be non-zero");
  r.tangent.normalize();
  return r;
}

CoilReadings load_readings(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("--readings", "cannot open " + file);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--readings", e.what());
  }
  return {read_coil(j, "sheath", CoilId::sheath), read_coil(j, "catheter", CoilId::catheter)};
}

Eigen::Vector3d model_tip(const ActuationQd& q, const RobotModel& model) {
  return coil_fk(actuation_to_shape(q, model.params, model.limits.theta_max),
                 actuated_geometry(q, model.params, model.geom))
      .catheter.position;
}

int run_fk(const CommonOptions& common, const std::vector<double>& q_in) {
  const ExperimentConfig cfg = load(common);
  const ActuationQd q = pick_q(q_in, cfg);
  const RobotModel& m = cfg.model;
  const ConfigPsid psi = actuation_to_shape(q, m.params, m.limits.theta_max);
  const RobotGeometryd geom = actuated_geometry(q, m.params, m.geom);
  const CoilPoses<double> coils = coil_fk(psi, geom);
  ordered_json out;
  out["q"] = vec(q.vector());
  out["psi"] = psi_json(psi);
  out["Ln"] = geom.Ln;
  out["sheath"] = coil_json(coils.sheath);
  out["catheter"] = coil_json(coils.catheter);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_jacobian_check(const CommonOptions& common, int samples, double tolerance) {
  const ExperimentConfig cfg = load(common);
  const RobotModel& m = cfg.model;
  std::mt19937_64 rng(cfg.plant.rng_seed);
  std::uniform_real_distribution<double> unit(-1, 1);
  const double h = 1e-6;

  double worst = 0;
  int checked = 0;
  while (checked < samples) {
    Vector6<double> v;
    v << std::numbers::pi * unit(rng), m.params.cn * 0.5 * (1 + unit(rng)), 0.8 * m.limits.gamma_max * unit(rng),
        std::numbers::pi * unit(rng), 10 * (1 + unit(rng)), 0.8 * m.limits.gamma_max * unit(rng);
    const ActuationQd q = ActuationQd::from_vector(v);
    Eigen::Matrix<double, 3, 6> fd;
    Eigen::Matrix<double, 3, 6> analytic;
    try {
      for (int i = 0; i < 6; ++i) {
        Vector6<double> lo = v, hi = v;
        lo(i) -= h;
        hi(i) += h;
        fd.col(i) = (model_tip(ActuationQd::from_vector(hi), m) - model_tip(ActuationQd::from_vector(lo), m)) / (2 * h);
      }
      const ConfigPsid psi = actuation_to_shape(q, m.params, m.limits.theta_max);
      analytic = control_jacobian(psi, q, m.params, actuated_geometry(q, m.params, m.geom)).J;
    } catch (const std::out_of_range&) {
      continue;  // outside the deflection range; draw again
    }
    const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1.0);
    worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff() / scale);
    ++checked;
  }
  const bool ok = worst < tolerance;
  ordered_json out{{"samples", checked}, {"max_relative_error", worst}, {"tolerance", tolerance}, {"pass", ok}};
  std::cout << out.dump(2) << "\n";
  return ok ? 0 : kExitCheckFailed;
}

int run_calibrate(const CommonOptions& common, const std::string& samples_file) {
  const ExperimentConfig cfg = load(common);
  std::ifstream in(samples_file);
  if (!in) throw ConfigError("--samples", "cannot open " + samples_file);
  const std::vector<CalibrationSample> samples = read_calibration_samples(in);
  const CalibrationResult r = calibrate(samples);
  ordered_json out;
  out["samples"] = r.samples;
  out["k1"] = r.k1;
  out["k2"] = r.k2;
  out["kc"] = r.kc;
  out["rms_theta1"] = r.rms_theta1;
  out["rms_theta2"] = r.rms_theta2;
  out["model"] = {{"k1", cfg.model.params.k1}, {"k2", cfg.model.params.k2}, {"kc", cfg.model.params.kc}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_fit_shape(const CommonOptions& common, const std::vector<double>& q_in, const std::string& readings_file) {
  const ExperimentConfig cfg = load(common);
  const ActuationQd q = pick_q(q_in, cfg);
  const RobotModel& m = cfg.model;
  const RobotGeometryd geom = actuated_geometry(q, m.params, m.geom);
  const ConfigPsid warm = actuation_to_shape(q, m.params, m.limits.theta_max);

  ordered_json out;
  CoilReadings readings;
  if (readings_file.empty()) {
    SimulatedPlant plant(cfg.plant, q);
    readings = plant.read_coils();
    out["true_psi"] = psi_json(plant.state().true_psi);
  } else {
    readings = load_readings(readings_file);
  }

  const FitResult fit = fit_shape(readings, warm, cfg.weights, geom, ShapeBounds{}, cfg.fit);
  const ConfigPsid psi = align_bend_planes(fit.psi, warm);
  out["readings"] = {{"sheath", reading_json(readings.sheath)}, {"catheter", reading_json(readings.catheter)}};
  out["warm_start"] = psi_json(warm);
  out["psi"] = psi_json(psi);
  out["residual"] = fit.residual;
  out["iterations"] = fit.iterations;
  out["converged"] = fit.converged;
  out["accepted"] = fit.converged && fit.residual <= cfg.fit.acceptance_threshold;
  out["tip_error"] = (coil_fk(psi, geom).catheter.position - readings.catheter.position).norm();
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_follow_path(const CommonOptions& common, const std::vector<std::string>& schemes, std::string out_dir) {
  ExperimentConfig cfg = load(common);
  if (!schemes.empty()) {
    cfg.schemes.clear();
    for (const std::string& name : schemes) {
      const auto s = parse_scheme(name);
      if (!s) throw ConfigError("--scheme", "unknown scheme \"" + name + "\"");
      cfg.schemes.push_back(*s);
    }
  }
  if (out_dir.empty()) {
    const char* env = std::getenv("CCRSIM_OUT_DIR");
    out_dir = env && *env ? env : cfg.output_dir;
  }

  const std::vector<SchemeRun> runs = run_experiment(cfg);
  write_outputs(out_dir, cfg, runs);
  for (const SchemeRun& run : runs) {
    const PathReport& r = run.report;
    std::cout << to_string(r.scheme) << ": converged " << r.converged << "/" << r.waypoints.size()
              << ", in-plane mean " << format_number(r.in_plane.mean) << " mm, out-of-plane mean "
              << format_number(r.out_of_plane.mean) << " mm, model error mean " << format_number(r.model_error.mean)
              << " mm\n";
  }
  std::cout << "wrote " << (std::filesystem::path(out_dir) / "report.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-segment catheter robot simulator"};
  app.require_subcommand(1);

  CommonOptions common;
  std::vector<double> q;
  int samples = 1000;
  double tolerance = 1e-5;
  std::string samples_file, readings_file, out_dir;
  std::vector<std::string> schemes;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON config file (defaults when omitted)")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Override the plant seed");
  };
  const auto add_q = [&](CLI::App* sub) {
    sub->add_option("--q", q, "delta1 beta1 gamma1 delta2 beta2 gamma2 (default: robot.initial_q)")->expected(6);
  };

  CLI::App* fk = app.add_subcommand("fk", "Shape and coil frames at a handle configuration");
  add_common(fk);
  add_q(fk);

  CLI::App* jc = app.add_subcommand("jacobian-check", "Compare the control Jacobian with finite differences");
  add_common(jc);
  jc->add_option("--samples", samples, "Random configurations")->check(CLI::PositiveNumber);
  jc->add_option("--tolerance", tolerance, "Maximum relative error");

  CLI::App* cal = app.add_subcommand("calibrate", "Fit k1, k2, kc from measured bend angles");
  add_common(cal);
  cal->add_option("--samples", samples_file, "Sample file: delta1 beta1 gamma1 delta2 beta2 gamma2 theta1 theta2")
      ->required();

  CLI::App* fit = app.add_subcommand("fit-shape", "Fit the shape to coil readings");
  add_common(fit);
  add_q(fit);
  fit->add_option("--readings", readings_file, "JSON coil readings (default: sample the simulated plant at --q)");

  CLI::App* follow = app.add_subcommand("follow-path", "Run the path-following experiment");
  add_common(follow);
  follow->add_option("--scheme", schemes, "open_loop, closed_loop or closed_loop_fit (repeatable)");
  follow->add_option("--out", out_dir, "Output directory (overrides CCRSIM_OUT_DIR and output.dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadInput;
  }

  try {
    if (*fk) return run_fk(common, q);
    if (*jc) return run_jacobian_check(common, samples, tolerance);
    if (*cal) return run_calibrate(common, samples_file);
    if (*fit) return run_fit_shape(common, q, readings_file);
    return run_follow_path(common, schemes, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const IdentifiabilityError& e) {
    std::cerr << "calibration: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const PlantFault& e) {
    std::cerr << "plant fault: " << e.what() << "\n";
    return kExitPlantFault;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}
