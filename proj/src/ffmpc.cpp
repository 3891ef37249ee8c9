#include "fftrack/ffmpc.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fftrack {

CondensedDynamics condense(const std::vector<StateMatrix>& A_seq, const InputMatrix& B) {
  const int N = static_cast<int>(A_seq.size());
  if (N < 1) throw std::invalid_argument("condense: horizon must be at least one step");
  CondensedDynamics cd;
  cd.bigA = Eigen::MatrixXd::Zero(kStateDim * (N + 1), kStateDim);
  cd.bigB = Eigen::MatrixXd::Zero(kStateDim * (N + 1), kInputDim * N);

  cd.bigA.topRows<kStateDim>().setIdentity();
  for (int k = 1; k <= N; ++k) {
    const auto& A = A_seq[k - 1];
    cd.bigA.middleRows<kStateDim>(kStateDim * k) =
        A * cd.bigA.middleRows<kStateDim>(kStateDim * (k - 1));
    for (int j = 0; j < k - 1; ++j) {
      cd.bigB.block<kStateDim, kInputDim>(kStateDim * k, kInputDim * j) =
          A * cd.bigB.block<kStateDim, kInputDim>(kStateDim * (k - 1), kInputDim * j);
    }
    cd.bigB.block<kStateDim, kInputDim>(kStateDim * k, kInputDim * (k - 1)) = B;
  }
  return cd;
}

Eigen::MatrixXd difference_matrix(int N) {
  if (N < 1) throw std::invalid_argument("difference_matrix: N must be positive");
  const int n = kInputDim * N;
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k < N; ++k) {
    E.block<kInputDim, kInputDim>(kInputDim * k, kInputDim * (k - 1)) =
        -Eigen::Matrix<double, kInputDim, kInputDim>::Identity();
  }
  return E;
}

FfWeights FfWeights::from_diagonals(const Eigen::Matrix<double, kStateDim, 1>& q_diag,
                                    const std::vector<ControlInput>& r_diags, int N) {
  if (N < 1) throw std::invalid_argument("FfWeights: N must be positive");
  if (r_diags.empty()) throw std::invalid_argument("FfWeights: R_0 is required");
  FfWeights w;
  w.Q = q_diag.replicate(N + 1, 1).asDiagonal();
  for (const auto& r : r_diags) {
    w.R.emplace_back(Eigen::MatrixXd(r.replicate(N, 1).asDiagonal()));
  }
  return w;
}

namespace {

bool is_diagonal(const Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

bool is_psd(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (is_diagonal(m)) return m.diagonal().minCoeff() >= -1e-12 * scale;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-9 * scale;
}

bool is_symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

void FfWeights::validate(int N) const {
  const int nx = kStateDim * (N + 1);
  const int nu = kInputDim * N;
  if (Q.rows() != nx || Q.cols() != nx) {
    throw std::invalid_argument("FfWeights: Q must be " + std::to_string(nx) + " square");
  }
  if (!is_symmetric(Q) || !is_psd(Q)) {
    throw std::invalid_argument("FfWeights: Q must be symmetric positive semidefinite");
  }
  if (R.empty()) throw std::invalid_argument("FfWeights: R_0 is required");
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (R[i].rows() != nu || R[i].cols() != nu) {
      throw std::invalid_argument("FfWeights: R_" + std::to_string(i) + " must be " +
                                  std::to_string(nu) + " square");
    }
    if (!is_symmetric(R[i]) || !check_strict_convexity(R[i])) {
      throw std::invalid_argument("FfWeights: R_" + std::to_string(i) +
                                  " must be symmetric positive definite");
    }
  }
}

ControlInput InputHistory::difference(int order) const {
  // Delta^i u(t-1) = sum_k (-1)^k C(i, k) u(t-1-k)
  ControlInput out = ControlInput::Zero();
  double binom = 1.0;
  for (int k = 0; k <= order; ++k) {
    out += ((k % 2 == 0) ? binom : -binom) * at(k);
    binom = binom * (order - k) / (k + 1);
  }
  return out;
}

std::vector<Eigen::VectorXd> history_offsets(const InputHistory& hist, int M, int N) {
  std::vector<Eigen::VectorXd> V;
  V.reserve(M);
  for (int i = 0; i < M; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kInputDim * N);
    v.head<kInputDim>() = -hist.difference(i);
    V.push_back(std::move(v));
  }
  return V;
}

void ConstraintSet::validate() const {
  if (input_lower && input_upper && !((*input_lower).array() < (*input_upper).array()).all()) {
    throw std::invalid_argument("ConstraintSet: input lower bounds must be below upper bounds");
  }
  if (state_lower && state_upper && !((*state_lower).array() < (*state_upper).array()).all()) {
    throw std::invalid_argument("ConstraintSet: state lower bounds must be below upper bounds");
  }
}

CostTerms build_cost(const CondensedDynamics& cd, const VehicleState& x0,
                     const AugmentedReference& tau_hat, const FfWeights& w,
                     const InputHistory& hist) {
  const int N = cd.horizon();
  if (tau_hat.horizon() != N) {
    throw std::invalid_argument("build_cost: reference length does not match the horizon");
  }
  w.validate(N);
  const int M = w.max_order();

  const Eigen::MatrixXd E = difference_matrix(N);
  const std::vector<Eigen::VectorXd> V = history_offsets(hist, M, N);

  // Powers E^0..E^M.
  std::vector<Eigen::MatrixXd> Epow{Eigen::MatrixXd::Identity(E.rows(), E.cols())};
  for (int i = 1; i <= M; ++i) Epow.push_back(E * Epow.back());

  const Eigen::VectorXd offset = cd.bigA * x0 - tau_hat.stacked();
  const Eigen::MatrixXd QB = w.Q * cd.bigB;

  CostTerms c;
  c.H = w.R[0] + cd.bigB.transpose() * QB;
  c.F = QB.transpose() * offset;
  c.Y = offset.dot(w.Q * offset);
  for (int i = 1; i <= M; ++i) {
    // Constant part of the i-th difference: sum_j E^j V_{i-j-1}.
    Eigen::VectorXd ci = Eigen::VectorXd::Zero(E.rows());
    for (int j = 0; j < i; ++j) ci += Epow[j] * V[i - j - 1];
    const Eigen::MatrixXd RE = w.R[i] * Epow[i];
    c.H += Epow[i].transpose() * RE;
    c.F += RE.transpose() * ci;
    c.Y += ci.dot(w.R[i] * ci);
  }
  c.H = 0.5 * (c.H + c.H.transpose()).eval();
  return c;
}

InequalityRows build_constraints(const ConstraintSet& cs, const CondensedDynamics& cd,
                                 const VehicleState& x0, int N) {
  cs.validate();
  if (cd.horizon() != N) throw std::invalid_argument("build_constraints: horizon mismatch");
  const int nu = kInputDim * N;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;

  auto add_row = [&](Eigen::VectorXd row, double bound) {
    rows.push_back(std::move(row));
    rhs.push_back(bound);
  };
  auto add_input_rows = [&](const ControlInput& bound, double sign) {
    for (int j = 0; j < nu; ++j) {
      const double v = bound[j % kInputDim];
      if (!std::isfinite(v)) continue;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(nu);
      row[j] = sign;
      add_row(std::move(row), sign * v);
    }
  };
  if (cs.input_upper) add_input_rows(*cs.input_upper, 1.0);
  if (cs.input_lower) add_input_rows(*cs.input_lower, -1.0);

  const Eigen::VectorXd free_response = cd.bigA * x0;
  if (cs.state_lower || cs.state_upper) {
    for (int k = 1; k <= N; ++k) {
      for (int s = 0; s < kStateDim; ++s) {
        const int r = kStateDim * k + s;
        if (cs.state_upper && std::isfinite((*cs.state_upper)[s])) {
          add_row(cd.bigB.row(r).transpose(), (*cs.state_upper)[s] - free_response[r]);
        }
        if (cs.state_lower && std::isfinite((*cs.state_lower)[s])) {
          add_row(-cd.bigB.row(r).transpose(), free_response[r] - (*cs.state_lower)[s]);
        }
      }
    }
  }
  for (const auto& sr : cs.state_rows) {
    if (sr.step < 1 || sr.step > N) {
      throw std::invalid_argument("build_constraints: state row step outside 1..N");
    }
    const auto block = cd.bigB.middleRows<kStateDim>(kStateDim * sr.step);
    add_row(block.transpose() * sr.coeffs,
            sr.bound - sr.coeffs.dot(free_response.segment<kStateDim>(kStateDim * sr.step)));
  }

  InequalityRows out;
  out.G.resize(static_cast<Eigen::Index>(rows.size()), nu);
  out.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.G.row(i) = rows[i].transpose();
    out.h[i] = rhs[i];
  }
  return out;
}

AssembledProblem assemble_problem(const ReferenceTrajectory& ref, const VehicleState& x0,
                                  const FfWeights& w, const ConstraintSet& cs,
                                  const ModelParams& p, const InputHistory& hist) {
  p.validate();
  ref.validate();
  if (std::abs(ref.dt - p.dt) > 1e-12) {
    throw std::invalid_argument("reference spacing does not match the model sample interval");
  }
  if (!x0.allFinite()) throw std::invalid_argument("initial state is not finite");
  const int N = ref.horizon();

  AssembledProblem prob;
  prob.tau_hat = augment_reference(ref);
  std::vector<StateMatrix> A_seq;
  A_seq.reserve(N);
  for (int k = 0; k < N; ++k) A_seq.push_back(linearize(prob.tau_hat.states[k], p).A);
  prob.dynamics = condense(A_seq, input_matrix(p));
  prob.cost = build_cost(prob.dynamics, x0, prob.tau_hat, w, hist);
  InequalityRows cons = build_constraints(cs, prob.dynamics, x0, N);

  prob.qp.H = 2.0 * prob.cost.H;
  prob.qp.F = 2.0 * prob.cost.F;
  prob.qp.Y = prob.cost.Y;
  prob.qp.G_I = std::move(cons.G);
  prob.qp.h = std::move(cons.h);
  prob.qp.G_E.resize(0, prob.qp.H.cols());
  prob.qp.b.resize(0);
  return prob;
}

FeedforwardPlan optimize_trajectory(const ReferenceTrajectory& ref, const VehicleState& x0,
                                    const FfWeights& w, const ConstraintSet& cs,
                                    const ModelParams& p, const InputHistory& hist,
                                    const QpOptions& qp_options) {
  const AssembledProblem prob = assemble_problem(ref, x0, w, cs, p, hist);
  const QpSolution sol = solve(prob.qp, qp_options);
  const int N = ref.horizon();

  FeedforwardPlan plan;
  plan.U = sol.x_star;
  plan.objective = sol.objective;
  plan.active_set = sol.active_set;
  plan.qp_stats.iterations = sol.iterations;
  plan.qp_stats.active_constraints = static_cast<int>(sol.active_set.size());
  plan.qp_stats.num_variables = prob.qp.num_variables();
  plan.qp_stats.num_inequalities = prob.qp.num_inequalities();
  plan.qp_stats.kkt = kkt_residual(prob.qp, sol);

  const Eigen::VectorXd tau = prob.dynamics.rollout(x0, sol.x_star);
  plan.nominal.states.reserve(N + 1);
  plan.nominal.inputs.reserve(N);
  for (int k = 0; k <= N; ++k) plan.nominal.states.push_back(tau.segment<kStateDim>(kStateDim * k));
  for (int k = 0; k < N; ++k) plan.nominal.inputs.push_back(sol.x_star.segment<kInputDim>(kInputDim * k));
  plan.u_ff_first = plan.nominal.inputs.front();
  return plan;
}

}  // namespace fftrack
