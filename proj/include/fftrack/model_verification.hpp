#pragma once

#include <vector>

#include "fftrack/vehicle_model.hpp"

namespace fftrack {

/// Open-loop sinusoid test of the discretized models:
///   alpha_in(t) = accel_amplitude * cos(2 pi t / accel_period)
///   delta_in(t) = steer_amplitude * cos(2 pi t / steer_period)
/// sampled every model dt and held between samples.
struct VerificationConfig {
  double duration = 5.0;
  VehicleState initial = (VehicleState() << 0, 0, 0, 0, 20, 0).finished();
  double accel_amplitude = 2.0;
  double accel_period = 10.0;
  double steer_amplitude = 0.2;
  double steer_period = 5.0;
  double oracle_dt = 1e-4;

  void validate(const ModelParams& p) const;
};

struct VerificationTraces {
  std::vector<double> times;
  std::vector<ControlInput> inputs;    // one per interval
  std::vector<VehicleState> oracle;    // RK4 at oracle_dt
  std::vector<VehicleState> euler;     // step_nonlinear at dt
  std::vector<VehicleState> ltv;       // linearize() about the Euler states

  /// Planar distance between two traces at sample k.
  static double position_gap(const VehicleState& a, const VehicleState& b);
};

VerificationTraces verify_linearization(const VerificationConfig& cfg, const ModelParams& p);

}  // namespace fftrack
