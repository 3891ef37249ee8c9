#include "fftrack/model_verification.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fftrack {

void VerificationConfig::validate(const ModelParams& p) const {
  if (!(duration > 0.0) || !(oracle_dt > 0.0) || oracle_dt > p.dt) {
    throw std::invalid_argument("verification: duration and oracle_dt must be positive, oracle_dt <= dt");
  }
  if (!(accel_period > 0.0) || !(steer_period > 0.0)) {
    throw std::invalid_argument("verification: sinusoid periods must be positive");
  }
  if (!initial.allFinite()) throw std::invalid_argument("verification: initial state not finite");
}

double VerificationTraces::position_gap(const VehicleState& a, const VehicleState& b) {
  return std::hypot(a[state::kS] - b[state::kS], a[state::kY] - b[state::kY]);
}

namespace {

VehicleState rk4_step(const VehicleState& x, const ControlInput& u, const ModelParams& p, double h) {
  const VehicleState k1 = derivative(x, u, p);
  const VehicleState k2 = derivative(x + 0.5 * h * k1, u, p);
  const VehicleState k3 = derivative(x + 0.5 * h * k2, u, p);
  const VehicleState k4 = derivative(x + h * k3, u, p);
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

VerificationTraces verify_linearization(const VerificationConfig& cfg, const ModelParams& p) {
  p.validate();
  cfg.validate(p);
  const long steps = std::lround(cfg.duration / p.dt);
  const long substeps = std::lround(p.dt / cfg.oracle_dt);
  const double h = p.dt / static_cast<double>(substeps);
  const InputMatrix B = input_matrix(p);

  VerificationTraces tr;
  tr.times.push_back(0.0);
  tr.oracle.push_back(cfg.initial);
  tr.euler.push_back(cfg.initial);
  tr.ltv.push_back(cfg.initial);
  for (long k = 0; k < steps; ++k) {
    const double t = k * p.dt;
    ControlInput u;
    u[input::kDeltaIn] = cfg.steer_amplitude * std::cos(2.0 * std::numbers::pi * t / cfg.steer_period);
    u[input::kAlphaIn] = cfg.accel_amplitude * std::cos(2.0 * std::numbers::pi * t / cfg.accel_period);
    tr.inputs.push_back(u);

    VehicleState xo = tr.oracle.back();
    for (long j = 0; j < substeps; ++j) xo = rk4_step(xo, u, p, h);
    tr.oracle.push_back(xo);

    const VehicleState& xe = tr.euler.back();
    const StateMatrix A = linearize(xe, p).A;
    tr.ltv.push_back(A * tr.ltv.back() + B * u);
    tr.euler.push_back(step_nonlinear(xe, u, p));
    tr.times.push_back((k + 1) * p.dt);
  }
  return tr;
}

}  // namespace fftrack
