#include "fftrack/ffmpc.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"

namespace fftrack {
namespace {

using test::direct_cost;
using test::max_abs_diff;
using test::random_matrix;
using test::random_vector;
using test::rel_diff;

std::vector<StateMatrix> random_steps(std::mt19937_64& rng, int N) {
  std::vector<StateMatrix> A;
  for (int k = 0; k < N; ++k) {
    A.push_back(StateMatrix::Identity() + random_matrix(rng, kStateDim, kStateDim, 0.3));
  }
  return A;
}

TEST(CondenseTest, SingleStep) {
  std::mt19937_64 rng(1);
  const auto A = random_steps(rng, 1);
  const InputMatrix B = random_matrix(rng, kStateDim, kInputDim, 1.0);
  const CondensedDynamics cd = condense(A, B);
  EXPECT_EQ(cd.bigA.topRows<kStateDim>(), StateMatrix::Identity());
  EXPECT_EQ(cd.bigA.bottomRows<kStateDim>(), A[0]);
  EXPECT_TRUE(cd.bigB.topRows<kStateDim>().isZero(0.0));
  EXPECT_EQ(cd.bigB.bottomRows<kStateDim>(), B);
}

TEST(CondenseTest, IdentityStepsRepeatTheInputMatrix) {
  const int N = 4;
  std::mt19937_64 rng(2);
  const InputMatrix B = random_matrix(rng, kStateDim, kInputDim, 1.0);
  const CondensedDynamics cd = condense(std::vector<StateMatrix>(N, StateMatrix::Identity()), B);
  for (int k = 0; k <= N; ++k) {
    for (int j = 0; j < N; ++j) {
      const Eigen::MatrixXd blk = cd.bigB.block(kStateDim * k, kInputDim * j, kStateDim, kInputDim);
      if (j < k) {
        EXPECT_EQ(blk, Eigen::MatrixXd(B));
      } else {
        EXPECT_TRUE(blk.isZero(0.0));
      }
    }
  }
}

TEST(CondenseTest, MatchesStepByStepRollout) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = 3 + trial % 5;
    const auto A = random_steps(rng, N);
    const InputMatrix B = random_matrix(rng, kStateDim, kInputDim, 1.0);
    const VehicleState x0 = random_vector(rng, kStateDim, 1.0);
    const Eigen::VectorXd U = random_vector(rng, kInputDim * N, 1.0);
    const Eigen::VectorXd tau = condense(A, B).rollout(x0, U);
    VehicleState x = x0;
    for (int k = 0; k <= N; ++k) {
      EXPECT_LT(max_abs_diff(tau.segment<kStateDim>(kStateDim * k), x), 1e-12 * std::max(1.0, x.norm()));
      if (k < N) x = A[k] * x + B * U.segment<kInputDim>(kInputDim * k);
    }
  }
}

TEST(CondenseTest, RejectsEmptyHorizon) {
  EXPECT_THROW(condense({}, InputMatrix::Zero()), std::invalid_argument);
}

TEST(DifferenceMatrixTest, TwoStepForm) {
  Eigen::MatrixXd expected(4, 4);
  expected << 1, 0, 0, 0,
              0, 1, 0, 0,
             -1, 0, 1, 0,
              0, -1, 0, 1;
  EXPECT_EQ(difference_matrix(2), expected);
}

TEST(DifferenceMatrixTest, ConstantSequenceTelescopes) {
  const int N = 6;
  const ControlInput u(0.3, -1.2);
  const Eigen::VectorXd out = difference_matrix(N) * u.replicate(N, 1);
  EXPECT_EQ(out.head<kInputDim>(), u);
  EXPECT_TRUE(out.tail(kInputDim * (N - 1)).isZero(0.0));
}

TEST(DifferenceMatrixTest, HighPowerIsRepeatedDifferencing) {
  const int N = 5;
  std::mt19937_64 rng(4);
  const Eigen::VectorXd U = random_vector(rng, kInputDim * N, 1.0);
  Eigen::MatrixXd EN = Eigen::MatrixXd::Identity(kInputDim * N, kInputDim * N);
  for (int i = 0; i < N; ++i) EN = difference_matrix(N) * EN;

  // Zero-padded sequence differenced N times, one block at a time.
  std::vector<ControlInput> seq;
  for (int k = 0; k < N; ++k) seq.push_back(U.segment<kInputDim>(kInputDim * k));
  for (int pass = 0; pass < N; ++pass) {
    for (int k = N - 1; k >= 0; --k) seq[k] -= (k > 0 ? seq[k - 1] : ControlInput::Zero());
  }
  const Eigen::VectorXd out = EN * U;
  for (int k = 0; k < N; ++k) {
    EXPECT_LT(max_abs_diff(out.segment<kInputDim>(kInputDim * k), seq[k]), 1e-12);
  }
}

TEST(InputHistoryTest, BackwardDifferences) {
  InputHistory h;
  h.inputs = {ControlInput(4, 1), ControlInput(1, 1), ControlInput(0, 1)};
  EXPECT_EQ(h.difference(0), ControlInput(4, 1));
  EXPECT_EQ(h.difference(1), ControlInput(3, 0));
  EXPECT_EQ(h.difference(2), ControlInput(2, 0));
  // Missing history counts as zero.
  EXPECT_EQ(h.difference(3), ControlInput(1, 1));
  const auto V = history_offsets(h, 2, 3);
  ASSERT_EQ(V.size(), 2u);
  EXPECT_EQ(V[1].head<2>(), ControlInput(-3, 0));
  EXPECT_TRUE(V[1].tail(4).isZero(0.0));
}

FfWeights random_weights(std::mt19937_64& rng, int N, int M) {
  FfWeights w;
  const int nx = kStateDim * (N + 1), nu = kInputDim * N;
  const Eigen::MatrixXd G = random_matrix(rng, nx / 2, nx, 1.0);
  w.Q = G.transpose() * G;  // PSD, rank deficient
  for (int i = 0; i <= M; ++i) w.R.push_back(test::random_spd(rng, nu, 0.5));
  return w;
}

AugmentedReference random_reference(std::mt19937_64& rng, int N) {
  AugmentedReference ref;
  for (int k = 0; k <= N; ++k) ref.states.push_back(random_vector(rng, kStateDim, 2.0));
  return ref;
}

TEST(BuildCostTest, DegenerateWeights) {
  const int N = 3;
  std::mt19937_64 rng(5);
  const CondensedDynamics cd = condense(random_steps(rng, N), random_matrix(rng, kStateDim, kInputDim, 1.0));
  FfWeights w;
  w.Q = Eigen::MatrixXd::Zero(kStateDim * (N + 1), kStateDim * (N + 1));
  w.R = {Eigen::MatrixXd::Identity(kInputDim * N, kInputDim * N)};
  const CostTerms c = build_cost(cd, random_vector(rng, kStateDim, 1.0), random_reference(rng, N), w, {});
  EXPECT_EQ(c.H, Eigen::MatrixXd::Identity(kInputDim * N, kInputDim * N));
  EXPECT_TRUE(c.F.isZero(0.0));
  EXPECT_EQ(c.Y, 0.0);
}

TEST(BuildCostTest, ZeroHistoryLeavesOnlyTheTrackingLinearTerm) {
  const int N = 4;
  std::mt19937_64 rng(6);
  const CondensedDynamics cd = condense(random_steps(rng, N), random_matrix(rng, kStateDim, kInputDim, 1.0));
  const VehicleState x0 = random_vector(rng, kStateDim, 1.0);
  const AugmentedReference ref = random_reference(rng, N);
  const FfWeights w = random_weights(rng, N, 1);
  InputHistory hist;
  hist.inputs = {ControlInput::Zero()};
  const CostTerms c = build_cost(cd, x0, ref, w, hist);
  const Eigen::VectorXd expected = cd.bigB.transpose() * (w.Q * (cd.bigA * x0 - ref.stacked()));
  EXPECT_LT(max_abs_diff(c.F, expected), 1e-10 * std::max(1.0, expected.norm()));
}

TEST(BuildCostTest, QuadraticFormMatchesDirectEvaluation) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int N = 2 + trial % 6;
    const int M = trial % 4;
    const CondensedDynamics cd = condense(random_steps(rng, N), random_matrix(rng, kStateDim, kInputDim, 1.0));
    const VehicleState x0 = random_vector(rng, kStateDim, 1.0);
    const AugmentedReference ref = random_reference(rng, N);
    const FfWeights w = random_weights(rng, N, M);
    InputHistory hist;
    for (int i = 0; i < M + trial % 2; ++i) hist.inputs.push_back(random_vector(rng, kInputDim, 1.0));
    const CostTerms c = build_cost(cd, x0, ref, w, hist);
    for (int draw = 0; draw < 5; ++draw) {
      const Eigen::VectorXd U = random_vector(rng, kInputDim * N, 2.0);
      const double oracle = direct_cost(cd, x0, ref, w, hist, U);
      EXPECT_LT(rel_diff(c.evaluate(U), oracle), 1e-9) << "N=" << N << " M=" << M;
    }
  }
}

TEST(BuildCostTest, NoDifferenceTermsIsPlainTrackingMpc) {
  const int N = 6;
  std::mt19937_64 rng(8);
  const CondensedDynamics cd = condense(random_steps(rng, N), random_matrix(rng, kStateDim, kInputDim, 1.0));
  const VehicleState x0 = random_vector(rng, kStateDim, 1.0);
  const AugmentedReference ref = random_reference(rng, N);
  const FfWeights w = random_weights(rng, N, 0);
  InputHistory hist;
  hist.inputs = {ControlInput(5, -5)};  // ignored without difference terms
  const CostTerms c = build_cost(cd, x0, ref, w, hist);
  const Eigen::MatrixXd H = w.R[0] + cd.bigB.transpose() * w.Q * cd.bigB;
  const Eigen::VectorXd F = cd.bigB.transpose() * w.Q * (cd.bigA * x0 - ref.stacked());
  EXPECT_LT(max_abs_diff(c.H, H), 1e-12 * H.cwiseAbs().maxCoeff());
  EXPECT_LT(max_abs_diff(c.F, F), 1e-12 * F.cwiseAbs().maxCoeff());
}

TEST(FfWeightsTest, ValidationRejectsBadWeights) {
  const int N = 2;
  Eigen::Matrix<double, kStateDim, 1> q;
  q << 10, 10, 10, 0, 10, 0;
  EXPECT_NO_THROW(FfWeights::from_diagonals(q, {ControlInput(0.1, 0.1), ControlInput(1, 1)}, N).validate(N));
  EXPECT_THROW(FfWeights::from_diagonals(q, {ControlInput(0.0, 0.1)}, N).validate(N), std::invalid_argument);
  q[0] = -1;
  EXPECT_THROW(FfWeights::from_diagonals(q, {ControlInput(0.1, 0.1)}, N).validate(N), std::invalid_argument);
  EXPECT_THROW(FfWeights::from_diagonals(q, {}, N), std::invalid_argument);
}

// Parameters of the five-segment optimization scenario.
struct Scenario {
  ModelParams p;
  ReferenceTrajectory ref;
  FfWeights w;
  ConstraintSet cs;
  VehicleState x0;
};

Scenario piecewise_scenario() {
  Scenario sc;
  sc.ref = generate_piecewise_reference(
      {{1.0, 20.0, 0.0}, {1.0, 20.0, 0.04}, {1.0, 18.0, 0.0}, {1.0, 18.0, -0.04}, {1.0, 20.0, 0.0}}, sc.p);
  Eigen::Matrix<double, kStateDim, 1> q;
  q << 10, 10, 10, 0, 10, 0;
  sc.w = FfWeights::from_diagonals(q, {ControlInput(0.1, 0.1), ControlInput(1, 1)}, sc.ref.horizon());
  sc.cs.input_lower = ControlInput(-0.1, -4.0);
  sc.cs.input_upper = ControlInput(0.1, 2.5);
  sc.x0 = augment_reference(sc.ref).states.front();
  return sc;
}

TEST(BuildConstraintsTest, BoxBoundsGiveFourRowsPerStep) {
  const Scenario sc = piecewise_scenario();
  const AssembledProblem prob = assemble_problem(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {});
  EXPECT_EQ(prob.qp.num_variables(), 100);
  EXPECT_EQ(prob.qp.num_inequalities(), 200);
  // Upper selector rows first, then lower.
  EXPECT_EQ(prob.qp.G_I(0, 0), 1.0);
  EXPECT_EQ(prob.qp.h[1], 2.5);
  EXPECT_EQ(prob.qp.G_I(100, 0), -1.0);
  EXPECT_EQ(prob.qp.h[101], 4.0);
}

TEST(BuildConstraintsTest, NoBoundsNoRows) {
  Scenario sc = piecewise_scenario();
  sc.cs = {};
  const AssembledProblem prob = assemble_problem(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {});
  EXPECT_EQ(prob.qp.num_inequalities(), 0);
  sc.cs.input_upper = ControlInput(std::numeric_limits<double>::infinity(), 2.5);
  EXPECT_EQ(assemble_problem(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {}).qp.num_inequalities(), 50);
}

TEST(BuildConstraintsTest, StateBoundHoldsOnTheRollout) {
  Scenario sc = piecewise_scenario();
  const FeedforwardPlan free_plan = optimize_trajectory(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {});
  const int k = 30;
  const double y_free = free_plan.nominal.states[k][state::kY];
  ASSERT_GT(y_free, 0.1);
  ConstraintSet::StateRow row;
  row.step = k;
  row.coeffs[state::kY] = 1.0;
  row.bound = y_free - 0.1;
  sc.cs.state_rows.push_back(row);
  const FeedforwardPlan plan = optimize_trajectory(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {});
  EXPECT_LE(plan.nominal.states[k][state::kY], row.bound + 1e-8);
  EXPECT_GT(plan.objective, free_plan.objective);

  // Box form of the same kind of bound applies at every step.
  Scenario boxed = piecewise_scenario();
  VehicleState upper = VehicleState::Constant(std::numeric_limits<double>::infinity());
  upper[state::kY] = y_free - 0.1;
  boxed.cs.state_upper = upper;
  const FeedforwardPlan bplan = optimize_trajectory(boxed.ref, boxed.x0, boxed.w, boxed.cs, boxed.p, {});
  for (int s = 1; s <= boxed.ref.horizon(); ++s) {
    EXPECT_LE(bplan.nominal.states[s][state::kY], upper[state::kY] + 1e-8);
  }
}

TEST(BuildConstraintsTest, ConflictingStateBoundsAreInfeasible) {
  Scenario sc = piecewise_scenario();
  ConstraintSet::StateRow a, b;
  a.step = b.step = 10;
  a.coeffs[state::kY] = 1.0;
  a.bound = -1.0;
  b.coeffs[state::kY] = -1.0;
  b.bound = -1.0;  // y >= 1
  sc.cs.state_rows = {a, b};
  try {
    optimize_trajectory(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {});
    FAIL() << "expected infeasibility";
  } catch (const QpError& e) {
    EXPECT_EQ(e.status(), QpStatus::kInfeasible);
  }
}

TEST(OptimizeTest, ZeroReferenceGivesZeroPlan) {
  ModelParams p;
  ReferenceTrajectory ref;
  ref.states.assign(11, PlannerState::Zero());
  Eigen::Matrix<double, kStateDim, 1> q = Eigen::Matrix<double, kStateDim, 1>::Ones();
  const FfWeights w = FfWeights::from_diagonals(q, {ControlInput(0.1, 0.1), ControlInput(1, 1)}, 10);
  ConstraintSet cs;
  cs.input_lower = ControlInput(-1, -1);
  cs.input_upper = ControlInput(1, 1);
  const FeedforwardPlan plan = optimize_trajectory(ref, VehicleState::Zero(), w, cs, p, {});
  EXPECT_TRUE(plan.U.isZero(0.0));
  for (const auto& x : plan.nominal.states) EXPECT_TRUE(x.isZero(0.0));
  EXPECT_EQ(plan.objective, 0.0);
}

TEST(OptimizeTest, PiecewiseScenarioSolvesToTolerance) {
  const Scenario sc = piecewise_scenario();
  const AssembledProblem prob = assemble_problem(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {});
  EXPECT_TRUE(check_strict_convexity(prob.qp.H));
  const FeedforwardPlan plan = optimize_trajectory(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {});
  EXPECT_LE(plan.qp_stats.kkt.max(), 1e-8);
  EXPECT_LT(plan.objective, prob.cost.evaluate(Eigen::VectorXd::Zero(100)));
  EXPECT_LT(rel_diff(plan.objective, prob.cost.evaluate(plan.U)), 1e-10);
  EXPECT_EQ(plan.u_ff_first, plan.U.head<kInputDim>());
  // The nominal trajectory is the batch rollout of the plan.
  const Eigen::VectorXd tau = prob.dynamics.rollout(sc.x0, plan.U);
  for (int k = 0; k <= 50; ++k) {
    EXPECT_EQ(plan.nominal.states[k], VehicleState(tau.segment<kStateDim>(kStateDim * k)));
  }
  // Bounds respected.
  for (const auto& u : plan.nominal.inputs) {
    EXPECT_GE(u[0], -0.1 - 1e-9);
    EXPECT_LE(u[0], 0.1 + 1e-9);
    EXPECT_GE(u[1], -4.0 - 1e-9);
    EXPECT_LE(u[1], 2.5 + 1e-9);
  }
}

TEST(OptimizeTest, HeavierSmoothingNeverRoughensThePlan) {
  Scenario sc = piecewise_scenario();
  InputHistory hist;
  hist.inputs = {ControlInput(0.02, 0.5)};
  const Eigen::MatrixXd E = difference_matrix(50);
  double previous = std::numeric_limits<double>::infinity();
  for (double scale : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    sc.w.R[1] = scale * Eigen::MatrixXd::Identity(100, 100);
    const FeedforwardPlan plan = optimize_trajectory(sc.ref, sc.x0, sc.w, sc.cs, sc.p, hist);
    Eigen::VectorXd d = E * plan.U;
    d.head<kInputDim>() -= hist.inputs[0];
    EXPECT_LE(d.norm(), previous * (1 + 1e-9)) << "scale " << scale;
    previous = d.norm();
  }
}

TEST(OptimizeTest, WarmStartsAgreeOnTheUniqueOptimum) {
  const Scenario sc = piecewise_scenario();
  const AssembledProblem prob = assemble_problem(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {});
  const QpSolution cold = solve(prob.qp);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> pick(0, prob.qp.num_inequalities() - 1);
  for (int trial = 0; trial < 10; ++trial) {
    QpOptions opt;
    for (int i = 0; i < 1 + trial * 3; ++i) opt.active_set_hint.push_back(pick(rng));
    if (trial % 3 == 0) opt.active_set_hint.insert(opt.active_set_hint.end(), cold.active_set.begin(), cold.active_set.end());
    const QpSolution warm = solve(prob.qp, opt);
    EXPECT_LT(max_abs_diff(warm.x_star, cold.x_star), 1e-8);
  }
}

TEST(OptimizeTest, RejectsMismatchedSampleInterval) {
  Scenario sc = piecewise_scenario();
  sc.ref.dt = 0.05;
  EXPECT_THROW(optimize_trajectory(sc.ref, sc.x0, sc.w, sc.cs, sc.p, {}), std::invalid_argument);
}

}  // namespace
}  // namespace fftrack
