#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fftrack/ffmpc.hpp"
#include "fftrack/qp.hpp"
#include "fftrack/trajectory.hpp"
#include "fftrack/tvlqr.hpp"
#include "fftrack/vehicle_model.hpp"

namespace fftrack {

enum class PlanningMode {
  kSingleShot,  // one optimization over the whole run
  kReceding,    // re-optimize every planner period over a sliding window
};

enum class PlantKind {
  kNonlinear,  // perturbed nonlinear plant (saturation, drag, noise)
  kIdealLtv,   // the feedforward model itself, linearized about the reference
};

struct RunConfig {
  double planner_period = 0.1;
  double ff_period = 0.1;
  double fb_period = 0.02;
  double total_duration = 15.0;
  PlanningMode mode = PlanningMode::kReceding;
  /// Feedforward horizon in samples for receding mode; single-shot mode
  /// always spans the whole run.
  int horizon = 50;

  /// The saved planner trajectory; publications are windows of it.
  ReferenceTrajectory reference;
  /// Defaults to the augmented first reference sample.
  std::optional<VehicleState> initial_state;

  PlantKind plant_kind = PlantKind::kNonlinear;
  PlantConfig plant;
  ModelParams model;

  Eigen::Matrix<double, kStateDim, 1> ff_q_diag = Eigen::Matrix<double, kStateDim, 1>::Zero();
  std::vector<ControlInput> ff_r_diags;
  ConstraintSet constraints;

  TvlqrWeights tvlqr;
  StateMatrix integrator_C = StateMatrix::Identity();
  /// When false the schedule is replaced by K = 0.
  bool feedback_enabled = true;
  /// Linear interpolation of the nominal state between samples instead of
  /// zero-order hold.
  bool interpolate_nominal = false;
  /// Receding mode only: solve the next optimization on a worker thread,
  /// starting from the nominal prediction, while the current one is tracked.
  bool concurrent = false;

  int ticks_per_sample() const;
  int ticks_per_plan() const;
  int total_ticks() const;
  void validate() const;
};

struct TickRecord {
  double time = 0.0;
  VehicleState true_state = VehicleState::Zero();
  VehicleState measured = VehicleState::Zero();
  VehicleState x_hat = VehicleState::Zero();
  AugState z_tilde = AugState::Zero();
  ControlInput u_ff = ControlInput::Zero();
  ControlInput u_fb = ControlInput::Zero();
  ControlInput u = ControlInput::Zero();
  bool saturated = false;
  int plan_index = 0;
};

struct PlanRecord {
  double time = 0.0;
  int horizon = 0;
  double objective = 0.0;
  int iterations = 0;
  int active_constraints = 0;
  double kkt_max = 0.0;
  double solve_ms = 0.0;  // wall clock, excluded from reproducibility checks
};

struct RunLog {
  std::vector<TickRecord> ticks;
  std::vector<PlanRecord> plans;

  /// Bitwise equality of everything except wall-clock timings.
  bool same_trajectory(const RunLog& other) const;
};

struct TrackingMetrics {
  // Channels in order s, y, theta, v.
  Eigen::Vector4d max_abs = Eigen::Vector4d::Zero();
  Eigen::Vector4d rms = Eigen::Vector4d::Zero();
  double input_delta_rms = 0.0;
};

/// Raised when an optimization fails mid-run; carries the simulated time.
class RunError : public std::runtime_error {
 public:
  RunError(double time, QpStatus status, const std::string& what)
      : std::runtime_error(what), time_(time), status_(status) {}
  double time() const { return time_; }
  QpStatus status() const { return status_; }

 private:
  double time_;
  QpStatus status_;
};

/// Builds the gain schedule for a nominal trajectory: A_fb from the exact
/// Jacobian at each nominal state, augmented with the integrator.
GainSchedule schedule_for(const NominalTrajectory& nominal, const ModelParams& p,
                          const StateMatrix& C, const TvlqrWeights& w);

RunLog run(const RunConfig& cfg);

/// Errors of the true state against the tracked nominal state.
TrackingMetrics compute_metrics(const RunLog& log);

/// RMS over k of |u(k+1) - u(k)|_2.
double rms_delta(const std::vector<ControlInput>& inputs);

/// Feedforward input at each nominal sample of the run (every
/// ticks_per_sample ticks).
std::vector<ControlInput> feedforward_trace(const RunLog& log, int ticks_per_sample);

}  // namespace fftrack
