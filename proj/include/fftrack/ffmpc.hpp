#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fftrack/qp.hpp"
#include "fftrack/trajectory.hpp"
#include "fftrack/vehicle_model.hpp"

namespace fftrack {

/// Batch LTV dynamics over N steps: tau = bigA * x0 + bigB * U, with
/// bigA of size 6(N+1) x 6 and bigB of size 6(N+1) x 2N.
struct CondensedDynamics {
  Eigen::MatrixXd bigA;
  Eigen::MatrixXd bigB;

  int horizon() const { return static_cast<int>(bigB.cols()) / kInputDim; }
  Eigen::VectorXd rollout(const VehicleState& x0, const Eigen::VectorXd& U) const {
    return bigA * x0 + bigB * U;
  }
};

/// Stacks the step matrices A(t), ..., A(t+N-1) and the shared input
/// matrix into the batch form. Row block k of bigA is A(t+k-1)...A(t);
/// block (k, j) of bigB is A(t+k-1)...A(t+j+1) B for j < k.
CondensedDynamics condense(const std::vector<StateMatrix>& A_seq, const InputMatrix& B);

/// Block bidiagonal 2N x 2N operator with I on the diagonal and -I below it.
Eigen::MatrixXd difference_matrix(int N);

/// Tracking and input-difference weights. R[i] weights the i-th difference
/// of the input sequence; the highest order M is R.size() - 1.
struct FfWeights {
  Eigen::MatrixXd Q;               // 6(N+1) x 6(N+1), symmetric PSD
  std::vector<Eigen::MatrixXd> R;  // each 2N x 2N, symmetric PD

  int max_order() const { return static_cast<int>(R.size()) - 1; }

  /// Replicates per-step diagonals across the horizon.
  static FfWeights from_diagonals(const Eigen::Matrix<double, kStateDim, 1>& q_diag,
                                  const std::vector<ControlInput>& r_diags, int N);

  /// Throws std::invalid_argument on size mismatch, asymmetry, a Q that is
  /// not PSD or any R[i] that is not PD.
  void validate(int N) const;
};

/// Past feedforward inputs, newest first: inputs[0] = u(t-1),
/// inputs[1] = u(t-2), ... Missing entries count as zero.
struct InputHistory {
  std::vector<ControlInput> inputs;

  ControlInput at(int age) const {
    return age < static_cast<int>(inputs.size()) ? inputs[age] : ControlInput::Zero();
  }
  /// i-th backward difference of the stored sequence evaluated at t-1.
  ControlInput difference(int order) const;
};

/// Offset vectors V_0..V_{M-1}: V_i = [-Delta^i u(t-1), 0, ..., 0].
std::vector<Eigen::VectorXd> history_offsets(const InputHistory& hist, int M, int N);

/// Box bounds on the inputs (applied to every step) and optional box bounds
/// on the predicted states x(t+1)..x(t+N). Infinite entries are skipped.
struct ConstraintSet {
  std::optional<ControlInput> input_lower;
  std::optional<ControlInput> input_upper;
  std::optional<VehicleState> state_lower;
  std::optional<VehicleState> state_upper;

  /// A single linear row c' x(t+step) <= bound.
  struct StateRow {
    int step = 1;
    VehicleState coeffs = VehicleState::Zero();
    double bound = 0.0;
  };
  std::vector<StateRow> state_rows;

  void validate() const;
};

/// Cost J(U) = U'HU + 2F'U + Y.
struct CostTerms {
  Eigen::MatrixXd H;
  Eigen::VectorXd F;
  double Y = 0.0;

  double evaluate(const Eigen::VectorXd& U) const { return U.dot(H * U) + 2.0 * F.dot(U) + Y; }
};

CostTerms build_cost(const CondensedDynamics& cd, const VehicleState& x0,
                     const AugmentedReference& tau_hat, const FfWeights& w,
                     const InputHistory& hist);

struct InequalityRows {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

/// Input bounds first (upper rows for all 2N inputs, then lower rows), then
/// state box rows step by step, then the explicit state rows.
InequalityRows build_constraints(const ConstraintSet& cs, const CondensedDynamics& cd,
                                 const VehicleState& x0, int N);

struct QpStats {
  int iterations = 0;
  int active_constraints = 0;
  int num_variables = 0;
  int num_inequalities = 0;
  KktResidual kkt;
};

struct FeedforwardPlan {
  NominalTrajectory nominal;
  ControlInput u_ff_first = ControlInput::Zero();
  Eigen::VectorXd U;  // stacked 2N feedforward sequence
  double objective = 0.0;
  QpStats qp_stats;
  std::vector<int> active_set;
};

/// Everything needed to solve one trajectory optimization: the QP is
/// 0.5 U'(2H)U + (2F)'U + Y, whose objective equals the tracking cost.
struct AssembledProblem {
  CondensedDynamics dynamics;
  AugmentedReference tau_hat;
  CostTerms cost;
  QuadraticProgram qp;
};

AssembledProblem assemble_problem(const ReferenceTrajectory& ref, const VehicleState& x0,
                                  const FfWeights& w, const ConstraintSet& cs,
                                  const ModelParams& p, const InputHistory& hist);

/// Linearizes about the augmented reference, condenses, solves the QP and
/// rolls the optimal inputs through the batch model. QpError (Infeasible)
/// propagates.
FeedforwardPlan optimize_trajectory(const ReferenceTrajectory& ref, const VehicleState& x0,
                                    const FfWeights& w, const ConstraintSet& cs,
                                    const ModelParams& p, const InputHistory& hist,
                                    const QpOptions& qp_options = {});

}  // namespace fftrack
