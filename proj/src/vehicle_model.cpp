#include "fftrack/vehicle_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fftrack {

void ModelParams::validate() const {
  if (!(wheelbase > 0.0)) throw std::invalid_argument("wheelbase must be positive");
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) {
    throw std::invalid_argument("lag rates must be positive");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (lambda1 * dt >= 1.0 || lambda2 * dt >= 1.0) {
    throw std::invalid_argument("lag rate times dt must stay below 1");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
}

ModelParams ModelParams::with_dt(double new_dt) const {
  ModelParams p = *this;
  p.dt = new_dt;
  return p;
}

void PlantConfig::validate() const {
  if (!(accel_min < 0.0 && accel_max > 0.0)) {
    throw std::invalid_argument("plant acceleration bounds must satisfy min < 0 < max");
  }
  if (!(steer_noise_std >= 0.0) || !(accel_noise_std >= 0.0)) {
    throw std::invalid_argument("noise standard deviations must be nonnegative");
  }
  if (!(drag_coefficient >= 0.0)) throw std::invalid_argument("drag must be nonnegative");
}

StateDerivative derivative(const VehicleState& x, const ControlInput& u,
                           const ModelParams& p) {
  using namespace state;
  const double theta = x[kTheta];
  const double v = x[kV];
  StateDerivative d;
  d[kS] = v * std::cos(theta);
  d[kY] = v * std::sin(theta);
  d[kTheta] = v / p.wheelbase * std::tan(x[kDelta]);
  d[kDelta] = -p.lambda1 * x[kDelta] + p.lambda1 * u[input::kDeltaIn];
  d[kV] = x[kAlpha];
  d[kAlpha] = -p.lambda2 * x[kAlpha] + p.lambda2 * u[input::kAlphaIn];
  if (!d.allFinite()) {
    throw std::domain_error("vehicle derivative is not finite (steering near +-pi/2?)");
  }
  return d;
}

VehicleState step_nonlinear(const VehicleState& x, const ControlInput& u,
                            const ModelParams& p) {
  return x + p.dt * derivative(x, u, p);
}

InputMatrix input_matrix(const ModelParams& p) {
  InputMatrix B = InputMatrix::Zero();
  B(state::kDelta, input::kDeltaIn) = p.lambda1 * p.dt;
  B(state::kAlpha, input::kAlphaIn) = p.lambda2 * p.dt;
  return B;
}

LinearModel linearize(const VehicleState& x_ref, const ModelParams& p) {
  using namespace state;
  if (!x_ref.allFinite()) throw std::domain_error("linearization point is not finite");
  const double dt = p.dt;
  const double theta = x_ref[kTheta];
  const double v = x_ref[kV];

  StateMatrix A = StateMatrix::Identity();
  A(kS, kV) = std::cos(theta) * dt;
  A(kY, kTheta) = p.beta * v * dt;
  A(kY, kV) = (1.0 - p.beta) * std::sin(theta) * dt;
  A(kTheta, kDelta) = v * dt / p.wheelbase;
  A(kDelta, kDelta) = 1.0 - p.lambda1 * dt;
  A(kV, kAlpha) = dt;
  A(kAlpha, kAlpha) = 1.0 - p.lambda2 * dt;
  return {A, input_matrix(p)};
}

PlantStep step_plant(const VehicleState& x, const ControlInput& u,
                     const ModelParams& p, const PlantConfig& cfg,
                     std::mt19937_64& rng) {
  PlantStep out;
  ControlInput applied = u;
  const double a_in = u[input::kAlphaIn];
  applied[input::kAlphaIn] = std::clamp(a_in, cfg.accel_min, cfg.accel_max);
  out.saturated = applied[input::kAlphaIn] != a_in;

  StateDerivative d = derivative(x, applied, p);
  if (cfg.drag_coefficient != 0.0) {
    const double v = x[state::kV];
    d[state::kV] -= cfg.drag_coefficient * v * v;
  }
  out.next = x + p.dt * d;

  out.measured = out.next;
  std::normal_distribution<double> normal(0.0, 1.0);
  if (cfg.steer_noise_std > 0.0) out.measured[state::kDelta] += cfg.steer_noise_std * normal(rng);
  if (cfg.accel_noise_std > 0.0) out.measured[state::kAlpha] += cfg.accel_noise_std * normal(rng);
  return out;
}

Plant::Plant(const ModelParams& params, const PlantConfig& cfg)
    : params_(params), cfg_(cfg), rng_(cfg.rng_seed) {
  params_.validate();
  cfg_.validate();
}

PlantStep Plant::step(const VehicleState& x, const ControlInput& u) {
  return step_plant(x, u, params_, cfg_, rng_);
}

VehicleState Plant::measure(const VehicleState& x) {
  VehicleState m = x;
  std::normal_distribution<double> normal(0.0, 1.0);
  if (cfg_.steer_noise_std > 0.0) m[state::kDelta] += cfg_.steer_noise_std * normal(rng_);
  if (cfg_.accel_noise_std > 0.0) m[state::kAlpha] += cfg_.accel_noise_std * normal(rng_);
  return m;
}

}  // namespace fftrack
