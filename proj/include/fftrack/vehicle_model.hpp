#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace fftrack {

constexpr int kStateDim = 6;
constexpr int kInputDim = 2;

/// Vehicle state [s, y, theta, delta, v, alpha]. The ordering is fixed
/// everywhere: longitudinal position, lateral position, heading, steering
/// angle, speed and longitudinal acceleration.
using VehicleState = Eigen::Matrix<double, kStateDim, 1>;
using StateDerivative = Eigen::Matrix<double, kStateDim, 1>;

/// Control input [delta_in, alpha_in]: commanded steering and acceleration.
using ControlInput = Eigen::Matrix<double, kInputDim, 1>;

using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputMatrix = Eigen::Matrix<double, kStateDim, kInputDim>;

namespace state {
constexpr int kS = 0;
constexpr int kY = 1;
constexpr int kTheta = 2;
constexpr int kDelta = 3;
constexpr int kV = 4;
constexpr int kAlpha = 5;
}  // namespace state

namespace input {
constexpr int kDeltaIn = 0;
constexpr int kAlphaIn = 1;
}  // namespace input

struct ModelParams {
  double wheelbase = 2.85;  // L [m]
  double lambda1 = 5.0;     // steering lag rate [1/s]
  double lambda2 = 5.0;     // acceleration lag rate [1/s]
  double dt = 0.1;          // sample interval [s]
  double beta = 0.5;        // blend of the lateral-position linearization

  /// Throws std::invalid_argument when a field is out of range, including
  /// lag rates too fast for the sample interval (lambda * dt >= 1).
  void validate() const;

  /// Copy with a different sample interval.
  ModelParams with_dt(double new_dt) const;
};

/// Perturbations of the simulated vehicle relative to the model: powertrain
/// saturation, quadratic drag and measurement noise.
struct PlantConfig {
  double accel_min = -4.0;
  double accel_max = 2.5;
  double steer_noise_std = 0.0;
  double accel_noise_std = 0.0;
  double drag_coefficient = 0.0;  // v_dot gets -drag * v^2 [1/m]
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Continuous-time kinematic bicycle with first-order actuator lags.
/// Throws std::domain_error when the result is not finite.
StateDerivative derivative(const VehicleState& x, const ControlInput& u,
                           const ModelParams& p);

/// One forward-Euler step of `derivative` over p.dt.
VehicleState step_nonlinear(const VehicleState& x, const ControlInput& u,
                            const ModelParams& p);

struct LinearModel {
  StateMatrix A;
  InputMatrix B;
};

/// Discrete LTV model about a reference state. The lateral row blends the
/// heading and speed couplings with p.beta; the heading row uses the
/// small-angle steering gain v*dt/L.
LinearModel linearize(const VehicleState& x_ref, const ModelParams& p);

/// The time-invariant input matrix shared by every linearization.
InputMatrix input_matrix(const ModelParams& p);

struct PlantStep {
  VehicleState next;
  VehicleState measured;
  bool saturated = false;
};

/// One step of the perturbed plant: saturates alpha_in to the config bounds,
/// adds -drag * v^2 to v_dot, integrates with forward Euler, and draws
/// Gaussian measurement noise on the delta and alpha channels from `rng`.
/// A config with zero noise, zero drag and non-binding bounds reproduces
/// step_nonlinear exactly.
PlantStep step_plant(const VehicleState& x, const ControlInput& u,
                     const ModelParams& p, const PlantConfig& cfg,
                     std::mt19937_64& rng);

/// Perturbed nonlinear plant. Owns its noise generator so that two plants
/// built from the same config produce identical sequences.
class Plant {
 public:
  Plant(const ModelParams& params, const PlantConfig& cfg);

  PlantStep step(const VehicleState& x, const ControlInput& u);

  /// Noisy copy of `x` (no integration).
  VehicleState measure(const VehicleState& x);

  const ModelParams& params() const { return params_; }
  const PlantConfig& config() const { return cfg_; }

 private:
  ModelParams params_;
  PlantConfig cfg_;
  std::mt19937_64 rng_;
};

}  // namespace fftrack
