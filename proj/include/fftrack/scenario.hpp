#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fftrack/closed_loop.hpp"
#include "fftrack/model_verification.hpp"

namespace fftrack {

/// Configuration error; the message starts with `file:line:` when the
/// location is known.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeedforwardSection {
  int horizon = 50;
  Eigen::Matrix<double, kStateDim, 1> q_diag = Eigen::Matrix<double, kStateDim, 1>::Zero();
  std::vector<ControlInput> r_diags;
  ConstraintSet constraints;
};

struct FeedbackSection {
  TvlqrWeights weights;
  StateMatrix integrator_C = StateMatrix::Identity();
  bool enabled = true;
};

struct RunSection {
  PlanningMode mode = PlanningMode::kReceding;
  double planner_period = 0.1;
  double fb_period = 0.02;
  double duration = 15.0;
  bool interpolate_nominal = false;
  bool concurrent = false;
};

/// A scenario file after parsing. Sections that were absent from the file
/// stay empty; commands that need them call the matching require_*().
struct Scenario {
  std::string source;  // path or label used in diagnostics
  ModelParams model;
  std::optional<ReferenceTrajectory> reference;
  std::optional<FeedforwardSection> feedforward;
  std::optional<FeedbackSection> feedback;
  std::optional<PlantConfig> plant;
  PlantKind plant_kind = PlantKind::kNonlinear;
  std::optional<RunSection> run;
  std::optional<VerificationConfig> verify;
  std::string output_dir = "out";

  const ReferenceTrajectory& require_reference() const;
  const FeedforwardSection& require_feedforward() const;
  const FeedbackSection& require_feedback() const;
  const VerificationConfig& require_verify() const;

  /// Closed-loop configuration; needs reference, feedforward, feedback,
  /// plant and run sections.
  RunConfig run_config() const;
};

/// Parses YAML text. Relative CSV paths resolve against `base_dir`.
Scenario parse_scenario(const std::string& text, const std::string& source,
                        const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

}  // namespace fftrack
