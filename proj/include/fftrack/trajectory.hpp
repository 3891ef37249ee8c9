#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fftrack/vehicle_model.hpp"

namespace fftrack {

/// Planner state [s, y, theta, v].
using PlannerState = Eigen::Vector4d;

/// Uniformly sampled planner output: N+1 states spaced dt apart, the first
/// one published at sample index `start_index`.
struct ReferenceTrajectory {
  int start_index = 0;
  double dt = 0.1;
  std::vector<PlannerState> states;

  /// Builds a reference from raw rows, rejecting rows that are not exactly
  /// [s, y, theta, v].
  static ReferenceTrajectory from_rows(const std::vector<std::vector<double>>& rows,
                                       double dt, int start_index = 0);

  int horizon() const { return static_cast<int>(states.size()) - 1; }
  double start_time() const { return start_index * dt; }

  /// Samples [first, first + count] as a new reference starting at
  /// start_index + first. Throws std::out_of_range when out of bounds.
  ReferenceTrajectory window(int first, int count) const;

  void validate() const;
};

/// Reference lifted to the full state space with the lag states (delta,
/// alpha) held at their equilibrium value of zero.
struct AugmentedReference {
  std::vector<VehicleState> states;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
  /// Stacked 6(N+1) vector.
  Eigen::VectorXd stacked() const;
};

/// Model-consistent state sequence (N+1 states) and the feedforward inputs
/// (N inputs) that generate it.
struct NominalTrajectory {
  std::vector<VehicleState> states;
  std::vector<ControlInput> inputs;

  int horizon() const { return static_cast<int>(inputs.size()); }
};

AugmentedReference augment_reference(const ReferenceTrajectory& ref);

/// Inverse of augment_reference on the planner coordinates.
std::vector<PlannerState> project_to_planner(const AugmentedReference& aug);

struct Segment {
  double duration = 0.0;  // [s], positive multiple of dt
  double speed = 0.0;     // [m/s]
  double steering = 0.0;  // [rad]
};

/// Starting pose for the scenario generator.
struct Pose {
  double s = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Forward kinematic simulation of piecewise-constant speed and steering
/// (no actuator lags), sampled every p.dt. Each step follows the exact
/// constant-curvature arc, so position and heading are continuous across
/// segment boundaries while speed changes only at segment starts.
ReferenceTrajectory generate_piecewise_reference(const std::vector<Segment>& segments,
                                                 const ModelParams& p, Pose start = {});

/// Inputs a lag-free LTV model would need to reproduce the reference:
/// delta_in = L * dtheta / (v * dt), alpha_in = dv / dt. One per interval.
std::vector<ControlInput> reference_inputs(const ReferenceTrajectory& ref, const ModelParams& p);

/// CSV with header `t,s,y,theta,v`.
void write_reference_csv(std::ostream& os, const ReferenceTrajectory& ref);
ReferenceTrajectory read_reference_csv(std::istream& is);
ReferenceTrajectory read_reference_csv(const std::string& path);

}  // namespace fftrack
