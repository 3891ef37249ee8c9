#include "fftrack/vehicle_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fftrack/model_verification.hpp"
#include "test_util.hpp"

namespace fftrack {
namespace {

using namespace state;

VehicleState make_state(double s, double y, double th, double d, double v, double a) {
  return (VehicleState() << s, y, th, d, v, a).finished();
}

ControlInput make_input(double d, double a) { return ControlInput(d, a); }

TEST(DerivativeTest, EquilibriumIsAFixedPoint) {
  EXPECT_EQ(derivative(VehicleState::Zero(), ControlInput::Zero(), ModelParams{}),
            StateDerivative::Zero());
}

TEST(DerivativeTest, StraightLineWithAccelerationCommand) {
  ModelParams p;
  p.lambda2 = 5.0;
  const StateDerivative d = derivative(make_state(0, 0, 0, 0, 20, 0), make_input(0, 2), p);
  EXPECT_EQ(d, (StateDerivative() << 20, 0, 0, 0, 0, 10).finished());
}

TEST(DerivativeTest, MatchesHandEvaluation) {
  ModelParams p;
  p.wheelbase = 2.85;
  p.lambda1 = p.lambda2 = 5.0;
  const StateDerivative d =
      derivative(make_state(0, 0, std::numbers::pi / 4, 0.1, 10, 1), make_input(0.2, 0), p);
  // 10 cos(pi/4), 10 sin(pi/4), 10/2.85 tan(0.1), -5*0.1 + 5*0.2, 1, -5*1
  EXPECT_NEAR(d[kS], 7.0710678118654755, 1e-12);
  EXPECT_NEAR(d[kY], 7.0710678118654755, 1e-12);
  EXPECT_NEAR(d[kTheta], 0.35205148100158085, 1e-12);
  EXPECT_NEAR(d[kDelta], 0.5, 1e-12);
  EXPECT_NEAR(d[kV], 1.0, 1e-12);
  EXPECT_NEAR(d[kAlpha], -5.0, 1e-12);
}

TEST(DerivativeTest, NonFiniteResultIsADomainError) {
  ModelParams p;
  VehicleState x = make_state(0, 0, 0, std::numbers::pi / 2, 1e300, 0);
  EXPECT_THROW(derivative(x, ControlInput::Zero(), p), std::domain_error);
  x = VehicleState::Zero();
  x[kV] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(derivative(x, ControlInput::Zero(), p), std::domain_error);
}

TEST(StepNonlinearTest, EquilibriumIsUnchanged) {
  EXPECT_EQ(step_nonlinear(VehicleState::Zero(), ControlInput::Zero(), ModelParams{}),
            VehicleState::Zero());
}

TEST(StepNonlinearTest, ConstantVelocityRollout) {
  ModelParams p;
  p.dt = 0.1;
  const VehicleState next = step_nonlinear(make_state(0, 0, 0, 0, 20, 0), ControlInput::Zero(), p);
  EXPECT_DOUBLE_EQ(next[kS], 2.0);
  EXPECT_EQ(next.tail<5>(), make_state(0, 0, 0, 0, 20, 0).tail<5>());
}

TEST(StepNonlinearTest, SinusoidRolloutStaysNearFineStepOracle) {
  const VerificationTraces tr = verify_linearization(VerificationConfig{}, ModelParams{});
  ASSERT_EQ(tr.times.size(), 51u);
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    worst = std::max(worst, VerificationTraces::position_gap(tr.euler[k], tr.oracle[k]));
  }
  // First implementation measured 1.3428 m over ~110 m of travel.
  EXPECT_LT(worst, 1.35);
}

TEST(LinearizeTest, ZeroHeadingAndSpeedLeavesOnlyTimeCouplings) {
  ModelParams p;
  const LinearModel lm = linearize(make_state(3, -1, 0, 0.05, 0, 0.2), p);
  EXPECT_EQ(lm.A(kY, kTheta), 0.0);
  EXPECT_EQ(lm.A(kTheta, kDelta), 0.0);
  EXPECT_EQ(lm.A(kS, kV), p.dt);
  EXPECT_EQ(lm.A(kY, kV), 0.0);
  EXPECT_EQ(lm.A(kV, kAlpha), p.dt);
  EXPECT_EQ((lm.A.topLeftCorner<3, 3>()), Eigen::Matrix3d::Identity());
}

TEST(LinearizeTest, PrintedEntriesAtCruise) {
  ModelParams p;
  p.dt = 0.1;
  p.beta = 0.5;
  p.wheelbase = 2.85;
  const LinearModel lm = linearize(make_state(0, 0, 0, 0, 20, 0), p);
  EXPECT_NEAR(lm.A(kY, kTheta), 1.0, 1e-15);
  EXPECT_NEAR(lm.A(kTheta, kDelta), 0.7017543859649122, 1e-15);
  EXPECT_NEAR(lm.A(kS, kV), 0.1, 1e-15);
  EXPECT_EQ(lm.A(kY, kV), 0.0);
}

TEST(LinearizeTest, LagEntries) {
  ModelParams p;
  p.lambda1 = p.lambda2 = 5.0;
  p.dt = 0.1;
  const LinearModel lm = linearize(VehicleState::Zero(), p);
  EXPECT_DOUBLE_EQ(lm.A(kDelta, kDelta), 0.5);
  EXPECT_DOUBLE_EQ(lm.A(kAlpha, kAlpha), 0.5);
  EXPECT_DOUBLE_EQ(lm.B(kDelta, input::kDeltaIn), 0.5);
  EXPECT_DOUBLE_EQ(lm.B(kAlpha, input::kAlphaIn), 0.5);
  EXPECT_EQ((lm.B.array() != 0.0).count(), 2);
}

StateMatrix fd_state_jacobian(const VehicleState& x, const ControlInput& u, const ModelParams& p) {
  const double h = 1e-6;
  StateMatrix J;
  for (int j = 0; j < kStateDim; ++j) {
    VehicleState xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (derivative(xp, u, p) - derivative(xm, u, p)) / (2 * h);
  }
  return J;
}

TEST(LinearizeTest, AgreesWithFiniteDifferencesAtZeroHeadingAndSteering) {
  // With beta = 0 and theta = delta = 0 the printed matrix is the Euler
  // Jacobian except for the lateral-heading entry, which is checked against
  // its own formula.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ModelParams p;
  p.beta = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const VehicleState x = make_state(10 * dist(rng), 5 * dist(rng), 0, 0, 15 + 10 * dist(rng), dist(rng));
    const ControlInput u(0.1 * dist(rng), dist(rng));
    const LinearModel lm = linearize(x, p);
    const StateMatrix fd = fd_state_jacobian(x, u, p);
    const StateMatrix cont = (lm.A - StateMatrix::Identity()) / p.dt;
    for (int i = 0; i < kStateDim; ++i) {
      for (int j = 0; j < kStateDim; ++j) {
        if (i == kY && j == kTheta) continue;
        EXPECT_NEAR(cont(i, j), fd(i, j), 1e-6 * std::max(1.0, std::abs(fd(i, j))))
            << "entry " << i << "," << j;
      }
    }
    EXPECT_EQ(lm.A(kY, kTheta), p.beta * x[kV] * p.dt);

    // Input matrix against finite differences in u.
    for (int j = 0; j < kInputDim; ++j) {
      ControlInput up = u, um = u;
      up[j] += 1e-6;
      um[j] -= 1e-6;
      const StateDerivative col = (derivative(x, up, p) - derivative(x, um, p)) / 2e-6;
      EXPECT_LT((lm.B.col(j) / p.dt - col).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(LinearizeTest, GeneralStatesFollowThePrintedFormulas) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams p;
    p.beta = 0.5 * (1.0 + dist(rng));
    const VehicleState x = make_state(dist(rng), dist(rng), dist(rng), 0.3 * dist(rng), 20 * dist(rng), dist(rng));
    const LinearModel lm = linearize(x, p);
    StateMatrix expected = StateMatrix::Identity();
    expected(kS, kV) = std::cos(x[kTheta]) * p.dt;
    expected(kY, kTheta) = p.beta * x[kV] * p.dt;
    expected(kY, kV) = (1 - p.beta) * std::sin(x[kTheta]) * p.dt;
    expected(kTheta, kDelta) = x[kV] * p.dt / p.wheelbase;
    expected(kDelta, kDelta) = 1 - p.lambda1 * p.dt;
    expected(kV, kAlpha) = p.dt;
    expected(kAlpha, kAlpha) = 1 - p.lambda2 * p.dt;
    EXPECT_EQ(lm.A, expected);
  }
}

TEST(LinearizationErrorTest, GrowthIsSubquadraticAndBounded) {
  const VerificationTraces tr = verify_linearization(VerificationConfig{}, ModelParams{});
  const std::size_t n = tr.times.size();
  double first_half = 0.0, second_half = 0.0, worst = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double gap = VerificationTraces::position_gap(tr.ltv[k], tr.euler[k]);
    const double ratio = gap / (tr.times[k] * tr.times[k]);
    double& half = k <= (n - 1) / 2 ? first_half : second_half;
    half = std::max(half, ratio);
    worst = std::max(worst, gap);
  }
  EXPECT_LT(second_half, first_half);
  // First implementation measured 3.2758 m.
  EXPECT_LT(worst, 3.30);
}

TEST(PlantTest, DegenerateConfigMatchesNonlinearStepExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ModelParams p;
  PlantConfig cfg;
  cfg.accel_min = -100;
  cfg.accel_max = 100;
  std::mt19937_64 noise(5);
  for (int trial = 0; trial < 20; ++trial) {
    const VehicleState x = make_state(dist(rng), dist(rng), dist(rng), 0.2 * dist(rng), 20 + dist(rng), dist(rng));
    const ControlInput u(0.1 * dist(rng), 2 * dist(rng));
    const PlantStep step = step_plant(x, u, p, cfg, noise);
    EXPECT_EQ(step.next, step_nonlinear(x, u, p));
    EXPECT_EQ(step.measured, step.next);
    EXPECT_FALSE(step.saturated);
  }
}

TEST(PlantTest, AccelerationCommandIsClamped) {
  ModelParams p;
  PlantConfig cfg;
  cfg.accel_max = 2.5;
  std::mt19937_64 noise(5);
  const VehicleState x = make_state(0, 0, 0, 0, 20, 0);
  const PlantStep step = step_plant(x, ControlInput(0, 5), p, cfg, noise);
  EXPECT_TRUE(step.saturated);
  EXPECT_EQ(step.next, step_nonlinear(x, ControlInput(0, 2.5), p));
}

TEST(PlantTest, DragAndNoiseAct) {
  ModelParams p;
  PlantConfig cfg;
  cfg.drag_coefficient = 1e-3;
  cfg.steer_noise_std = 0.01;
  cfg.accel_noise_std = 0.1;
  std::mt19937_64 noise(5);
  const VehicleState x = make_state(0, 0, 0, 0, 20, 0);
  const PlantStep step = step_plant(x, ControlInput::Zero(), p, cfg, noise);
  EXPECT_NEAR(step.next[kV], 20 - p.dt * 1e-3 * 400, 1e-12);
  // Noise only on the steering and acceleration channels.
  EXPECT_EQ(step.measured[kS], step.next[kS]);
  EXPECT_EQ(step.measured[kY], step.next[kY]);
  EXPECT_EQ(step.measured[kTheta], step.next[kTheta]);
  EXPECT_EQ(step.measured[kV], step.next[kV]);
  EXPECT_NE(step.measured[kDelta], step.next[kDelta]);
  EXPECT_NE(step.measured[kAlpha], step.next[kAlpha]);
}

TEST(PlantTest, SameSeedSameSequence) {
  PlantConfig cfg;
  cfg.steer_noise_std = 0.01;
  cfg.accel_noise_std = 0.1;
  cfg.drag_coefficient = 4e-4;
  cfg.rng_seed = 42;
  Plant a(ModelParams{}, cfg), b(ModelParams{}, cfg);
  VehicleState xa = make_state(0, 0, 0, 0, 20, 0), xb = xa;
  for (int k = 0; k < 100; ++k) {
    const ControlInput u(0.05 * std::sin(0.1 * k), 3 * std::cos(0.05 * k));
    const PlantStep sa = a.step(xa, u), sb = b.step(xb, u);
    ASSERT_EQ(sa.measured, sb.measured);
    ASSERT_EQ(sa.next, sb.next);
    xa = sa.next;
    xb = sb.next;
  }
}

TEST(ModelParamsTest, RejectsLagsFasterThanTheSampleRate) {
  ModelParams p;
  p.lambda1 = 10.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = ModelParams{};
  p.beta = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_NO_THROW(ModelParams{}.validate());
}

}  // namespace
}  // namespace fftrack
