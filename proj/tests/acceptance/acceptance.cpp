// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ccr/calibration.hpp"
#include "ccr/harness.hpp"
#include "ccr/jacobians.hpp"
#include "oracles.hpp"

using namespace ccr;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Analytic Jacobians against central differences.
Outcome jacobian_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const ActuationParamsd params;
  double worst_v = 0, worst_q = 0, worst_control = 0;
  for (int i = 0; i < 1000; ++i) {
    const ConfigPsid psi{oracle::signed_uniform(rng, 0.05, 2.5), oracle::uniform(rng, 40, 100),
                         oracle::uniform(rng, -3.0, 3.0), oracle::signed_uniform(rng, 0.05, 2.5),
                         oracle::uniform(rng, 25, 70), oracle::uniform(rng, -3.0, 3.0)};
    const RobotGeometryd geom{oracle::uniform(rng, 0, 20), 0, 0};

    const auto tip = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return full_fk(ConfigPsid::from_vector(v), geom).position;
    };
    worst_v = std::max(worst_v, oracle::relative_error(robot_linear_jacobian(psi, geom),
                                                       oracle::central_difference(tip, psi.vector(), 1e-6)));

    const ActuationQd q = shape_to_actuation(psi, params);
    const auto shape = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      // Raw map without angle wrapping, so differences never straddle +-pi.
      const ActuationQd x = ActuationQd::from_vector(v);
      Vector6<double> out;
      const double theta1 = params.k1 * x.gamma1;
      out << theta1, x.beta1 + params.b1, x.delta1,
          params.k2 * x.gamma2 + params.kc * theta1 * std::cos(x.delta1 - x.delta2), x.beta2 + params.b2, x.delta2;
      return out;
    };
    worst_q = std::max(worst_q, oracle::relative_error(actuation_jacobian(q, params),
                                                       oracle::central_difference(shape, q.vector(), 1e-6)));

    // Full control Jacobian including the coupled insertion of the connector.
    ActuationQd qc = q;
    qc.beta1 = oracle::uniform(rng, 0, 10);
    qc.beta2 = oracle::uniform(rng, 0, 20);
    const RobotGeometryd base{0, 0, 0};
    const auto control_tip = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      const ActuationQd x = ActuationQd::from_vector(v);
      const Vector6<double> s = shape(v);
      return full_fk(ConfigPsid::from_vector(s), RobotGeometryd{params.cn + x.beta2 - x.beta1, 0, 0}).position;
    };
    const ConfigPsid psic = ConfigPsid::from_vector(shape(qc.vector()));
    const Eigen::Matrix<double, 3, 6> J = control_jacobian(psic, qc, params, actuated_geometry(qc, params, base)).J;
    worst_control = std::max(worst_control,
                             oracle::relative_error(J, oracle::central_difference(control_tip, qc.vector(), 1e-6)));
  }
  const double t = seconds_since(t0);
  const double worst = std::max({worst_v, worst_q, worst_control});
  return {worst < 1e-5 && t < 5,
          fmt("max rel err Jv %.2e, Jq %.2e, J %.2e; %.2f s", worst_v, worst_q, worst_control, t)};
}

// 2. Both arc-function branches agree around the switch, and the public
// functions are continuous across it.
Outcome singular_limit() {
  const double t0 = kSingularTheta<double>;
  double branch_gap = 0, switch_gap = 0;
  for (double L : {1.0, 50.0, 150.0}) {
    for (double theta : {0.5 * t0, 1.5 * t0, -0.5 * t0, -1.5 * t0}) {
      const ArcTerms<double> s = detail::arc_terms_series(theta);
      const ArcTerms<double> c = detail::arc_terms_closed(theta);
      // Position entries scale with L h, L sigma; Jacobian columns with L dh, L dsigma, h, sigma.
      branch_gap = std::max({branch_gap, L * std::abs(s.h - c.h), L * std::abs(s.sigma - c.sigma),
                             L * std::abs(s.dh - c.dh), L * std::abs(s.dsigma - c.dsigma)});
    }
    for (double delta : {0.0, 1.0, -2.5}) {
      const Posed a = segment_fk(t0 * (1 - 1e-9), L, delta), b = segment_fk(t0 * (1 + 1e-9), L, delta);
      const auto ja = segment_jacobian(t0 * (1 - 1e-9), L, delta), jb = segment_jacobian(t0 * (1 + 1e-9), L, delta);
      switch_gap = std::max({switch_gap, (a.position - b.position).cwiseAbs().maxCoeff(),
                             (ja.Jv - jb.Jv).cwiseAbs().maxCoeff()});
    }
  }
  return {branch_gap < 1e-8 && switch_gap < 1e-8,
          fmt("series vs closed form at theta = 1e-6 (1 +- 0.5): %.2e; jump at the switch: %.2e", branch_gap,
              switch_gap)};
}

// 3. Closed-form arc against numerical integration of the backbone.
Outcome fk_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(303);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double theta = oracle::uniform(rng, -3.0, 3.0), L = oracle::uniform(rng, 5, 150),
                 delta = oracle::uniform(rng, -pi, pi);
    const oracle::Frame f = oracle::integrate_arc(theta, L, delta, L, 100000);
    worst = std::max(worst, (segment_fk(theta, L, delta).position - f.p).norm());
  }
  return {worst < 1e-6, fmt("max |p - p_integrated| %.2e mm; %.2f s", worst, seconds_since(t0))};
}

// 4. Shape fitting from noiseless readings.
Outcome shape_fit_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(404);
  const RobotGeometryd geom{10, 0, 0};
  int good = 0, flagged = 0, silent = 0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    const ConfigPsid truth{oracle::signed_uniform(rng, 0.05, 2.5), oracle::uniform(rng, 40, 100),
                           oracle::uniform(rng, -pi, pi), oracle::signed_uniform(rng, 0.05, 2.5),
                           oracle::uniform(rng, 25, 70), oracle::uniform(rng, -pi, pi)};
    const CoilPoses<double> c = coil_fk(truth, geom);
    const CoilReadings readings{{c.sheath.position, c.sheath.tangent(), CoilId::sheath, 0.0},
                                {c.catheter.position, c.catheter.tangent(), CoilId::catheter, 0.0}};
    Vector6<double> start = truth.vector();
    for (int k = 0; k < 6; ++k) start(k) *= 1 + oracle::uniform(rng, -0.1, 0.1);
    const FitResult fit = fit_shape(readings, ConfigPsid::from_vector(start), FitWeights{}, geom);
    const double err = (coil_fk(fit.psi, geom).catheter.position - c.catheter.position).norm();
    if (err < 1e-3) {
      ++good;
    } else if (!fit.converged) {
      ++flagged;
    } else {
      ++silent;
    }
  }
  const double t = seconds_since(t0);
  return {good >= 0.99 * n && silent == 0 && t < 30,
          fmt("%d/%d within 1e-3 mm, %d flagged non-converged, %d silent; %.2f s", good, n, flagged, silent, t)};
}

// 5. Gain calibration round trip.
Outcome calibration_round_trip() {
  const ActuationParamsd truth;
  const auto synthesize = [&](std::mt19937_64& rng, int n, double sigma) {
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<CalibrationSample> out;
    for (int i = 0; i < n; ++i) {
      const ActuationQd q{oracle::uniform(rng, -pi, pi), oracle::uniform(rng, 0, 30), oracle::uniform(rng, -4, 4),
                          oracle::uniform(rng, -pi, pi), oracle::uniform(rng, 0, 30), oracle::uniform(rng, -4, 4)};
      const double theta1 = truth.k1 * q.gamma1;
      const double theta2 = truth.k2 * q.gamma2 + truth.kc * theta1 * std::cos(q.delta1 - q.delta2);
      out.push_back({q, theta1 + (sigma > 0 ? noise(rng) : 0.0), theta2 + (sigma > 0 ? noise(rng) : 0.0)});
    }
    return out;
  };
  const auto rel = [&](const CalibrationResult& r) {
    return std::max({std::abs(r.k1 / truth.k1 - 1), std::abs(r.k2 / truth.k2 - 1), std::abs(r.kc / truth.kc - 1)});
  };

  std::mt19937_64 rng(505);
  const double exact = rel(calibrate(synthesize(rng, 20, 0.0)));
  std::vector<double> e1, e2, ec;
  for (int trial = 0; trial < 50; ++trial) {
    const CalibrationResult r = calibrate(synthesize(rng, 100, 0.01));
    e1.push_back(std::abs(r.k1 / truth.k1 - 1));
    e2.push_back(std::abs(r.k2 / truth.k2 - 1));
    ec.push_back(std::abs(r.kc / truth.kc - 1));
  }
  const auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  const double m1 = median(e1), m2 = median(e2), mc = median(ec);
  return {exact < 1e-9 && std::max({m1, m2, mc}) < 0.02,
          fmt("noiseless rel err %.1e; noisy median rel err k1 %.2f%%, k2 %.2f%%, kc %.2f%%", exact, 100 * m1,
              100 * m2, 100 * mc)};
}

const PathReport& report_of(const std::vector<SchemeRun>& runs, ControlScheme s) {
  return std::find_if(runs.begin(), runs.end(), [&](const SchemeRun& r) { return r.report.scheme == s; })->report;
}

// 6-8 share the default mismatched experiment.
struct Mismatched {
  std::vector<SchemeRun> runs;
  double seconds = 0;
};

Mismatched mismatched_run(std::uint64_t seed) {
  ExperimentConfig cfg = default_experiment();
  cfg.plant.rng_seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  Mismatched out{run_experiment(cfg), 0};
  out.seconds = seconds_since(t0);
  return out;
}

Outcome scheme_comparison(const Mismatched& run) {
  const double open = report_of(run.runs, ControlScheme::open_loop).in_plane.mean;
  const double closed = report_of(run.runs, ControlScheme::closed_loop).in_plane.mean;
  const double fit = report_of(run.runs, ControlScheme::closed_loop_fit).in_plane.mean;
  const bool ok = open >= 5 && closed <= 1.5 && fit <= 1.5 && open >= 3 * closed && open >= 3 * fit &&
                  run.seconds < 120;
  return {ok, fmt("mean in-plane error open_loop %.2f, closed_loop %.2f, closed_loop_fit %.2f mm; %.2f s", open,
                  closed, fit, run.seconds)};
}

Outcome model_residual(const std::vector<Mismatched>& seeds) {
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const double closed = report_of(seeds[i].runs, ControlScheme::closed_loop).model_error.mean;
    const double fit = report_of(seeds[i].runs, ControlScheme::closed_loop_fit).model_error.mean;
    ok = ok && fit <= 0.5 * closed;
    detail += fmt("%sseed %zu: fit %.3f vs %.2f mm", i ? ", " : "", i + 1, fit, closed);
  }
  return {ok, detail};
}

Outcome convergence_budget(const Mismatched& run) {
  bool ok = true;
  std::string detail;
  for (const SchemeRun& r : run.runs) {
    const double share = double(r.report.converged) / r.report.waypoints.size();
    ok = ok && share >= 0.95;
    detail += fmt("%s%s %zu/%zu", detail.empty() ? "" : ", ", to_string(r.report.scheme).c_str(), r.report.converged,
                  r.report.waypoints.size());
  }
  return {ok, detail + " within 20 cycles"};
}

// 9. Two CLI runs, same config and seed.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "ccr_acceptance_determinism";
  fs::remove_all(root);
  int codes[2];
  for (int i = 0; i < 2; ++i) {
    const std::string cmd = std::string(CCRSIM_PATH) + " follow-path --seed 7 --out " +
                            (root / std::to_string(i)).string() + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    codes[i] = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string a = slurp(root / "0" / "report.json"), b = slurp(root / "1" / "report.json");
  fs::remove_all(root);
  const bool ok = codes[0] == 0 && codes[1] == 0 && !a.empty() && a == b;
  return {ok, fmt("exit codes %d, %d; report.json %zu bytes, %s", codes[0], codes[1], a.size(),
                  a == b ? "identical" : "different")};
}

// 10. No mismatch: every scheme converges and the feedback source is irrelevant.
Outcome zero_mismatch() {
  ExperimentConfig cfg = default_experiment();
  cfg.plant = PlantConfig::matched(cfg.model.params, cfg.model.geom, cfg.model.limits);
  cfg.control.convergence_threshold = 0.05;
  const std::vector<Eigen::Vector3d> path = generate_path(cfg.path);

  bool ok = true;
  std::string detail;
  std::vector<std::vector<ActuationQd>> commands;
  for (ControlScheme s : cfg.schemes) {
    ControlConfig cc = cfg.control;
    cc.scheme = s;
    SimulatedPlant plant(cfg.plant, cfg.initial_q);
    Controller controller(cc, cfg.model, cfg.initial_q, cfg.weights, cfg.fit);
    controller.follow_path(path, plant);
    const PathReport r = summarize(controller.logs(), cfg.path.normal, s);
    ok = ok && r.converged == path.size() && r.error.mean < 0.1;
    detail += fmt("%s %zu/%zu mean %.3f mm, ", to_string(s).c_str(), r.converged, path.size(), r.error.mean);
    if (s != ControlScheme::closed_loop_fit) commands.push_back(plant.state().commanded);
  }
  double gap = commands[0].size() == commands[1].size() ? 0 : INFINITY;
  for (std::size_t i = 0; std::isfinite(gap) && i < commands[0].size(); ++i) {
    gap = std::max(gap, (commands[0][i].vector() - commands[1][i].vector()).cwiseAbs().maxCoeff());
  }
  ok = ok && gap < 1e-9;
  return {ok, detail + fmt("open vs closed commands max diff %.1e (threshold 0.05 mm)", gap)};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
  };

  report(1, "Jacobian correctness", jacobian_correctness);
  report(2, "singular-limit continuity", singular_limit);
  report(3, "forward kinematics vs integration", fk_oracle);
  report(4, "shape-fitting recovery", shape_fit_recovery);
  report(5, "calibration round trip", calibration_round_trip);

  std::vector<Mismatched> seeds;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) seeds.push_back(mismatched_run(seed));
  report(6, "scheme comparison", [&] { return scheme_comparison(seeds[0]); });
  report(7, "model residual", [&] { return model_residual(seeds); });
  report(8, "convergence budget", [&] { return convergence_budget(seeds[0]); });
  report(9, "determinism", determinism);
  report(10, "zero-mismatch identity", zero_mismatch);

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
