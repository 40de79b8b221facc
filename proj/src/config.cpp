#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ccr/errors.hpp"
#include "ccr/harness.hpp"

namespace ccr {

namespace {

using nlohmann::json;

/// Reads fields out of one JSON object, rejecting unknown keys.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  /// Call once every known key has been read.
  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(child(key), "unknown key");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(child(key), "expected a number");
    out = v.get<double>();
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(child(key), "expected an integer");
    out = v.get<int>();
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(child(key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    out = v.get<std::string>();
  }

  template <int N>
  void vector(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != N) {
      throw ConfigError(child(key), "expected an array of " + std::to_string(N) + " numbers");
    }
    for (int i = 0; i < N; ++i) {
      if (!v[i].is_number()) throw ConfigError(child(key), "expected an array of numbers");
      out(i) = v[i].get<double>();
    }
  }

  Section section(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), child(key));
  }

  const json& raw(const std::string& key) const { return j_.at(key); }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_params(Section s, ActuationParamsd& p) {
  s.number("k1", p.k1);
  s.number("k2", p.k2);
  s.number("kc", p.kc);
  s.number("b1", p.b1);
  s.number("b2", p.b2);
  s.number("r1", p.r1);
  s.number("r2", p.r2);
  s.number("cn", p.cn);
  std::string mode;
  s.string("insertion", mode);
  if (mode == "fixed") {
    p.insertion = InsertionModel::fixed;
  } else if (mode == "coupled") {
    p.insertion = InsertionModel::coupled;
  } else if (!mode.empty()) {
    throw ConfigError(s.child("insertion"), "expected \"fixed\" or \"coupled\"");
  }
  s.done();
}

void read_limits(Section s, ActuationLimitsd& l) {
  s.number("beta_min", l.beta_min);
  s.number("beta_max", l.beta_max);
  s.number("gamma_max", l.gamma_max);
  s.number("delta_max", l.delta_max);
  s.number("theta_max", l.theta_max);
  s.done();
}

void read_geometry(Section s, RobotGeometryd& g) {
  s.number("coil_offset1", g.coil_offset1);
  s.number("coil_offset2", g.coil_offset2);
  s.done();
}

template <typename Fn>
void checked(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const std::out_of_range& e) {
    throw ConfigError(field, e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

ExperimentConfig parse(const json& root) {
  ExperimentConfig cfg = default_experiment();
  Section top(root, "");

  if (top.has("robot")) {
    Section robot = top.section("robot");
    if (robot.has("params")) read_params(robot.section("params"), cfg.model.params);
    if (robot.has("limits")) read_limits(robot.section("limits"), cfg.model.limits);
    if (robot.has("geometry")) read_geometry(robot.section("geometry"), cfg.model.geom);
    Vector6<double> q = cfg.initial_q.vector();
    robot.vector<6>("initial_q", q);
    cfg.initial_q = ActuationQd::from_vector(q);
    robot.done();
    checked("robot.params", [&] { validate(cfg.model.params); });
    checked("robot.geometry", [&] { validate(cfg.model.geom); });
    if (!within_limits(cfg.initial_q, cfg.model.limits)) throw ConfigError("robot.initial_q", "outside actuator limits");
  }

  // The plant starts from a profile built on the (possibly overridden) model.
  std::string profile = "mismatched";
  std::uint64_t seed = cfg.plant.rng_seed;
  if (top.has("plant")) {
    Section plant = top.section("plant");
    plant.string("profile", profile);
    if (profile == "mismatched") {
      cfg.plant = PlantConfig::mismatched(cfg.model.params, cfg.model.geom, cfg.model.limits);
    } else if (profile == "matched") {
      cfg.plant = PlantConfig::matched(cfg.model.params, cfg.model.geom, cfg.model.limits);
    } else {
      throw ConfigError("plant.profile", "expected \"mismatched\" or \"matched\"");
    }
    if (plant.has("params")) read_params(plant.section("params"), cfg.plant.true_params);
    if (plant.has("limits")) read_limits(plant.section("limits"), cfg.plant.limits);
    if (plant.has("geometry")) read_geometry(plant.section("geometry"), cfg.plant.true_geom);
    plant.number("backlash_width", cfg.plant.backlash_width);
    plant.number("sensor_noise_sigma_pos", cfg.plant.sensor_noise_sigma_pos);
    plant.number("sensor_noise_sigma_tangent", cfg.plant.sensor_noise_sigma_tangent);
    plant.number("curvature_distortion", cfg.plant.curvature_distortion);
    plant.vector<3>("registration_translation", cfg.plant.registration_translation);
    plant.vector<3>("registration_rotation", cfg.plant.registration_rotation);
    plant.seed("seed", seed);
    plant.done();
  } else {
    cfg.plant = PlantConfig::mismatched(cfg.model.params, cfg.model.geom, cfg.model.limits);
  }
  cfg.plant.rng_seed = seed;
  checked("plant", [&] { validate(cfg.plant); });

  if (top.has("control")) {
    Section control = top.section("control");
    control.number("alpha", cfg.control.alpha);
    control.number("lambda", cfg.control.lambda);
    control.number("convergence_threshold", cfg.control.convergence_threshold);
    control.integer("max_cycles_per_target", cfg.control.max_cycles_per_target);
    if (control.has("rate_limits")) {
      Section rl = control.section("rate_limits");
      rl.number("delta", cfg.control.rate_limits.delta);
      rl.number("beta", cfg.control.rate_limits.beta);
      rl.number("gamma", cfg.control.rate_limits.gamma);
      rl.done();
    }
    if (control.has("schemes")) {
      const json& list = control.raw("schemes");
      if (!list.is_array() || list.empty()) throw ConfigError("control.schemes", "expected a non-empty array");
      cfg.schemes.clear();
      for (const auto& item : list) {
        const auto scheme = item.is_string() ? parse_scheme(item.get<std::string>()) : std::nullopt;
        if (!scheme) throw ConfigError("control.schemes", "unknown scheme " + item.dump());
        cfg.schemes.push_back(*scheme);
      }
    }
    control.done();
    checked("control", [&] { validate(cfg.control); });
  }

  if (top.has("estimator")) {
    Section est = top.section("estimator");
    if (est.has("weights")) {
      Section w = est.section("weights");
      w.number("position_sheath", cfg.weights.position_sheath);
      w.number("tangent_sheath", cfg.weights.tangent_sheath);
      w.number("position_catheter", cfg.weights.position_catheter);
      w.number("tangent_catheter", cfg.weights.tangent_catheter);
      w.done();
      const FitWeights& fw = cfg.weights;
      if (!(fw.position_sheath > 0 && fw.tangent_sheath > 0 && fw.position_catheter > 0 && fw.tangent_catheter > 0)) {
        throw ConfigError("estimator.weights", "weights must be > 0");
      }
    }
    est.integer("max_iterations", cfg.fit.max_iterations);
    est.number("step_tolerance", cfg.fit.step_tolerance);
    est.number("residual_tolerance", cfg.fit.residual_tolerance);
    est.number("acceptance_threshold", cfg.fit.acceptance_threshold);
    est.done();
    if (cfg.fit.max_iterations < 1) throw ConfigError("estimator.max_iterations", "must be >= 1");
  }

  if (top.has("path")) {
    Section path = top.section("path");
    path.vector<3>("center", cfg.path.center);
    path.vector<3>("normal", cfg.path.normal);
    path.number("radius", cfg.path.radius);
    path.integer("n_points", cfg.path.n_points);
    path.number("phase", cfg.path.phase);
    std::string dir;
    path.string("direction", dir);
    if (dir == "cw") {
      cfg.path.direction = PathDirection::cw;
    } else if (dir == "ccw") {
      cfg.path.direction = PathDirection::ccw;
    } else if (!dir.empty()) {
      throw ConfigError("path.direction", "expected \"ccw\" or \"cw\"");
    }
    if (path.has("normal")) {
      const double n = cfg.path.normal.norm();
      if (!(n > 0)) throw ConfigError("path.normal", "must be non-zero");
      cfg.path.normal /= n;
    }
    path.done();
    checked("path", [&] { validate(cfg.path); });
  }

  if (top.has("output")) {
    Section out = top.section("output");
    out.string("dir", cfg.output_dir);
    out.done();
  }
  top.done();
  return cfg;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", e.what());
  }
  return parse(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace ccr
