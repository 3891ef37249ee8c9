#include "fftrack/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace fftrack {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    const auto mark = node.Mark();
    if (mark.line >= 0) {
      throw ScenarioError(source_ + ":" + std::to_string(mark.line + 1) + ": " + what);
    }
    throw ScenarioError(source_ + ": " + what);
  }

  void expect_map(const YAML::Node& node, const std::string& name) const {
    if (!node.IsMap()) fail(node, "'" + name + "' must be a mapping");
  }

  void only_keys(const YAML::Node& node, const std::string& section,
                 std::initializer_list<const char*> allowed) const {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in " + section);
    }
  }

  double number(const YAML::Node& node, const std::string& name) const {
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + name + "' must be a number");
    }
  }

  int integer(const YAML::Node& node, const std::string& name) const {
    try {
      return node.as<int>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + name + "' must be an integer");
    }
  }

  bool boolean(const YAML::Node& node, const std::string& name) const {
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + name + "' must be true or false");
    }
  }

  std::string text(const YAML::Node& node, const std::string& name) const {
    if (!node.IsScalar()) fail(node, "'" + name + "' must be a string");
    return node.as<std::string>();
  }

  Eigen::VectorXd vector(const YAML::Node& node, const std::string& name, int size) const {
    if (!node.IsSequence() || static_cast<int>(node.size()) != size) {
      fail(node, "'" + name + "' must be a list of " + std::to_string(size) + " numbers");
    }
    Eigen::VectorXd out(size);
    for (int i = 0; i < size; ++i) out[i] = number(node[i], name);
    return out;
  }

  void set_if(const YAML::Node& parent, const char* key, double& field) const {
    if (const auto n = parent[key]) field = number(n, key);
  }
  void set_if(const YAML::Node& parent, const char* key, bool& field) const {
    if (const auto n = parent[key]) field = boolean(n, key);
  }

  // Checks run after construction so the message points at the section.
  template <class F>
  void checked(const YAML::Node& node, F&& validate) const {
    try {
      validate();
    } catch (const std::invalid_argument& e) {
      fail(node, e.what());
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

ModelParams parse_model(const Reader& r, const YAML::Node& n) {
  r.expect_map(n, "model");
  r.only_keys(n, "model", {"wheelbase", "lambda1", "lambda2", "dt", "beta"});
  ModelParams p;
  r.set_if(n, "wheelbase", p.wheelbase);
  r.set_if(n, "lambda1", p.lambda1);
  r.set_if(n, "lambda2", p.lambda2);
  r.set_if(n, "dt", p.dt);
  r.set_if(n, "beta", p.beta);
  r.checked(n, [&] { p.validate(); });
  return p;
}

ReferenceTrajectory parse_reference(const Reader& r, const YAML::Node& n, const ModelParams& p,
                                    const std::string& base_dir) {
  r.expect_map(n, "reference");
  r.only_keys(n, "reference", {"start", "segments", "csv"});
  if (static_cast<bool>(n["segments"]) == static_cast<bool>(n["csv"])) {
    r.fail(n, "reference needs exactly one of 'segments' or 'csv'");
  }
  if (const auto csv = n["csv"]) {
    std::filesystem::path path = r.text(csv, "csv");
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    try {
      ReferenceTrajectory ref = read_reference_csv(path.string());
      if (std::abs(ref.dt - p.dt) > 1e-9) {
        r.fail(csv, "reference CSV spacing " + std::to_string(ref.dt) +
                        " does not match model dt " + std::to_string(p.dt));
      }
      ref.dt = p.dt;
      return ref;
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::exception& e) {
      r.fail(csv, e.what());
    }
  }
  Pose start;
  if (const auto s = n["start"]) {
    r.expect_map(s, "start");
    r.only_keys(s, "reference.start", {"s", "y", "theta"});
    r.set_if(s, "s", start.s);
    r.set_if(s, "y", start.y);
    r.set_if(s, "theta", start.theta);
  }
  const auto segs = n["segments"];
  if (!segs.IsSequence() || segs.size() == 0) r.fail(segs, "'segments' must be a non-empty list");
  std::vector<Segment> segments;
  for (const auto& item : segs) {
    r.expect_map(item, "segment");
    r.only_keys(item, "segment", {"duration", "speed", "steering"});
    Segment sg;
    if (!item["duration"] || !item["speed"]) r.fail(item, "segment needs 'duration' and 'speed'");
    r.set_if(item, "duration", sg.duration);
    r.set_if(item, "speed", sg.speed);
    r.set_if(item, "steering", sg.steering);
    segments.push_back(sg);
  }
  ReferenceTrajectory ref;
  r.checked(segs, [&] { ref = generate_piecewise_reference(segments, p, start); });
  return ref;
}

ControlInput input_pair(const Reader& r, const YAML::Node& n, const std::string& name) {
  return r.vector(n, name, kInputDim);
}

FeedforwardSection parse_feedforward(const Reader& r, const YAML::Node& n) {
  r.expect_map(n, "feedforward");
  r.only_keys(n, "feedforward", {"horizon", "q_diag", "r_diags", "input_lower", "input_upper",
                                  "state_lower", "state_upper"});
  FeedforwardSection ff;
  if (const auto h = n["horizon"]) ff.horizon = r.integer(h, "horizon");
  if (ff.horizon < 1) r.fail(n["horizon"], "'horizon' must be positive");
  if (!n["q_diag"] || !n["r_diags"]) r.fail(n, "feedforward needs 'q_diag' and 'r_diags'");
  ff.q_diag = r.vector(n["q_diag"], "q_diag", kStateDim);
  const auto rd = n["r_diags"];
  if (!rd.IsSequence() || rd.size() == 0) r.fail(rd, "'r_diags' must be a non-empty list of pairs");
  for (const auto& item : rd) ff.r_diags.push_back(input_pair(r, item, "r_diags entry"));
  if (const auto v = n["input_lower"]) ff.constraints.input_lower = input_pair(r, v, "input_lower");
  if (const auto v = n["input_upper"]) ff.constraints.input_upper = input_pair(r, v, "input_upper");
  if (const auto v = n["state_lower"]) ff.constraints.state_lower = r.vector(v, "state_lower", kStateDim);
  if (const auto v = n["state_upper"]) ff.constraints.state_upper = r.vector(v, "state_upper", kStateDim);
  r.checked(n, [&] {
    ff.constraints.validate();
    FfWeights::from_diagonals(ff.q_diag, ff.r_diags, 1).validate(1);
  });
  return ff;
}

FeedbackSection parse_feedback(const Reader& r, const YAML::Node& n) {
  r.expect_map(n, "feedback");
  r.only_keys(n, "feedback",
              {"q_diag", "r_diag", "terminal_ridge", "p_diag", "integrator_diag", "enabled"});
  if (!n["q_diag"] || !n["r_diag"]) r.fail(n, "feedback needs 'q_diag' and 'r_diag'");
  if (n["terminal_ridge"] && n["p_diag"]) r.fail(n, "give either 'terminal_ridge' or 'p_diag'");
  FeedbackSection fb;
  const AugState q = r.vector(n["q_diag"], "q_diag", kAugDim);
  const ControlInput rr = input_pair(r, n["r_diag"], "r_diag");
  double ridge = 1e-6;
  if (const auto t = n["terminal_ridge"]) ridge = r.number(t, "terminal_ridge");
  fb.weights = TvlqrWeights::from_diagonals(q, rr, ridge);
  if (const auto pd = n["p_diag"]) fb.weights.Pbar = AugState(r.vector(pd, "p_diag", kAugDim)).asDiagonal();
  if (const auto c = n["integrator_diag"]) {
    fb.integrator_C = VehicleState(r.vector(c, "integrator_diag", kStateDim)).asDiagonal();
  }
  r.set_if(n, "enabled", fb.enabled);
  r.checked(n, [&] { fb.weights.validate(); });
  return fb;
}

PlantConfig parse_plant(const Reader& r, const YAML::Node& n, PlantKind& kind) {
  r.expect_map(n, "plant");
  r.only_keys(n, "plant", {"kind", "accel_min", "accel_max", "steer_noise_std", "accel_noise_std",
                            "drag_coefficient", "seed"});
  PlantConfig cfg;
  if (const auto k = n["kind"]) {
    const std::string s = r.text(k, "kind");
    if (s == "nonlinear") {
      kind = PlantKind::kNonlinear;
    } else if (s == "ideal-ltv") {
      kind = PlantKind::kIdealLtv;
    } else {
      r.fail(k, "plant kind must be 'nonlinear' or 'ideal-ltv'");
    }
  }
  r.set_if(n, "accel_min", cfg.accel_min);
  r.set_if(n, "accel_max", cfg.accel_max);
  r.set_if(n, "steer_noise_std", cfg.steer_noise_std);
  r.set_if(n, "accel_noise_std", cfg.accel_noise_std);
  r.set_if(n, "drag_coefficient", cfg.drag_coefficient);
  if (const auto s = n["seed"]) {
    try {
      cfg.rng_seed = s.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      r.fail(s, "'seed' must be a non-negative integer");
    }
  }
  r.checked(n, [&] { cfg.validate(); });
  return cfg;
}

RunSection parse_run(const Reader& r, const YAML::Node& n) {
  r.expect_map(n, "run");
  r.only_keys(n, "run", {"mode", "planner_period", "fb_period", "duration", "interpolate_nominal",
                          "concurrent"});
  RunSection run;
  if (const auto m = n["mode"]) {
    const std::string s = r.text(m, "mode");
    if (s == "receding") {
      run.mode = PlanningMode::kReceding;
    } else if (s == "single-shot") {
      run.mode = PlanningMode::kSingleShot;
    } else {
      r.fail(m, "run mode must be 'receding' or 'single-shot'");
    }
  }
  r.set_if(n, "planner_period", run.planner_period);
  r.set_if(n, "fb_period", run.fb_period);
  r.set_if(n, "duration", run.duration);
  r.set_if(n, "interpolate_nominal", run.interpolate_nominal);
  r.set_if(n, "concurrent", run.concurrent);
  return run;
}

VerificationConfig parse_verify(const Reader& r, const YAML::Node& n, const ModelParams& p) {
  r.expect_map(n, "verify");
  r.only_keys(n, "verify", {"duration", "initial", "accel_amplitude", "accel_period",
                             "steer_amplitude", "steer_period", "oracle_dt"});
  VerificationConfig v;
  r.set_if(n, "duration", v.duration);
  if (const auto i = n["initial"]) v.initial = r.vector(i, "initial", kStateDim);
  r.set_if(n, "accel_amplitude", v.accel_amplitude);
  r.set_if(n, "accel_period", v.accel_period);
  r.set_if(n, "steer_amplitude", v.steer_amplitude);
  r.set_if(n, "steer_period", v.steer_period);
  r.set_if(n, "oracle_dt", v.oracle_dt);
  r.checked(n, [&] { v.validate(p); });
  return v;
}

template <class T>
const T& required(const std::optional<T>& value, const std::string& source, const char* section) {
  if (!value) throw ScenarioError(source + ": missing required section '" + section + "'");
  return *value;
}

}  // namespace

const ReferenceTrajectory& Scenario::require_reference() const {
  return required(reference, source, "reference");
}
const FeedforwardSection& Scenario::require_feedforward() const {
  return required(feedforward, source, "feedforward");
}
const FeedbackSection& Scenario::require_feedback() const {
  return required(feedback, source, "feedback");
}
const VerificationConfig& Scenario::require_verify() const {
  return required(verify, source, "verify");
}

RunConfig Scenario::run_config() const {
  const auto& ff = require_feedforward();
  const auto& fb = require_feedback();
  const auto& rs = required(run, source, "run");
  RunConfig cfg;
  cfg.planner_period = rs.planner_period;
  cfg.ff_period = model.dt;
  cfg.fb_period = rs.fb_period;
  cfg.total_duration = rs.duration;
  cfg.mode = rs.mode;
  cfg.horizon = ff.horizon;
  cfg.reference = require_reference();
  cfg.plant_kind = plant_kind;
  cfg.plant = required(plant, source, "plant");
  cfg.model = model;
  cfg.ff_q_diag = ff.q_diag;
  cfg.ff_r_diags = ff.r_diags;
  cfg.constraints = ff.constraints;
  cfg.tvlqr = fb.weights;
  cfg.integrator_C = fb.integrator_C;
  cfg.feedback_enabled = fb.enabled;
  cfg.interpolate_nominal = rs.interpolate_nominal;
  cfg.concurrent = rs.concurrent;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(source + ": " + e.what());
  }
  return cfg;
}

Scenario parse_scenario(const std::string& text, const std::string& source,
                        const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ScenarioError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  const Reader r(source);
  if (!root.IsMap()) throw ScenarioError(source + ": top level must be a mapping");
  r.only_keys(root, "scenario", {"model", "reference", "feedforward", "feedback", "plant", "run",
                                 "verify", "output"});
  if (!root["model"]) throw ScenarioError(source + ": missing required section 'model'");

  Scenario sc;
  sc.source = source;
  sc.model = parse_model(r, root["model"]);
  if (const auto n = root["reference"]) sc.reference = parse_reference(r, n, sc.model, base_dir);
  if (const auto n = root["feedforward"]) sc.feedforward = parse_feedforward(r, n);
  if (const auto n = root["feedback"]) sc.feedback = parse_feedback(r, n);
  if (const auto n = root["plant"]) sc.plant = parse_plant(r, n, sc.plant_kind);
  if (const auto n = root["run"]) sc.run = parse_run(r, n);
  if (const auto n = root["verify"]) sc.verify = parse_verify(r, n, sc.model);
  if (const auto n = root["output"]) {
    r.expect_map(n, "output");
    r.only_keys(n, "output", {"dir"});
    if (const auto d = n["dir"]) sc.output_dir = r.text(d, "dir");
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_scenario(ss.str(), path, dir.empty() ? "." : dir.string());
}

}  // namespace fftrack
