#include "fftrack/tvlqr.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fftrack {

TvlqrWeights TvlqrWeights::from_diagonals(const AugState& q_diag, const ControlInput& r_diag,
                                          double terminal_ridge) {
  TvlqrWeights w;
  w.Qbar = q_diag.asDiagonal();
  w.Rbar = r_diag.asDiagonal();
  w.Pbar = w.Qbar + terminal_ridge * AugMatrix::Identity();
  return w;
}

void TvlqrWeights::validate() const {
  auto symmetric = [](const auto& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  };
  if (!symmetric(Qbar) || !symmetric(Rbar) || !symmetric(Pbar)) {
    throw std::invalid_argument("TVLQR weights must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<AugMatrix> q(Qbar, Eigen::EigenvaluesOnly);
  if (q.eigenvalues().minCoeff() < -1e-12) throw std::invalid_argument("Qbar must be PSD");
  if (Eigen::LLT<Eigen::Matrix2d>(Rbar).info() != Eigen::Success) {
    throw std::invalid_argument("Rbar must be positive definite");
  }
  if (Eigen::LLT<AugMatrix>(Pbar).info() != Eigen::Success) {
    throw std::invalid_argument("Pbar must be positive definite");
  }
}

StateMatrix error_jacobian(const VehicleState& x_hat, const ModelParams& p) {
  using namespace state;
  if (!x_hat.allFinite()) throw std::domain_error("error_jacobian: state is not finite");
  const double delta = x_hat[kDelta];
  if (std::abs(delta) >= std::numbers::pi / 2) {
    throw std::domain_error("error_jacobian: |delta| must stay below pi/2");
  }
  const double dt = p.dt;
  const double theta = x_hat[kTheta];
  const double v = x_hat[kV];
  const double c = std::cos(delta);

  StateMatrix A = StateMatrix::Identity();
  A(kS, kTheta) = -v * std::sin(theta) * dt;
  A(kS, kV) = std::cos(theta) * dt;
  A(kY, kTheta) = v * std::cos(theta) * dt;
  A(kY, kV) = std::sin(theta) * dt;
  A(kTheta, kDelta) = v / (p.wheelbase * c * c) * dt;
  A(kTheta, kV) = std::tan(delta) / p.wheelbase * dt;
  A(kDelta, kDelta) = 1.0 - p.lambda1 * dt;
  A(kV, kAlpha) = dt;
  A(kAlpha, kAlpha) = 1.0 - p.lambda2 * dt;
  return A;
}

AugmentedDynamics augment_dynamics(const StateMatrix& A_fb, const InputMatrix& B,
                                   const StateMatrix& C) {
  AugmentedDynamics out;
  out.A.setZero();
  out.A.topLeftCorner<kStateDim, kStateDim>() = A_fb;
  out.A.bottomLeftCorner<kStateDim, kStateDim>() = C;
  out.A.bottomRightCorner<kStateDim, kStateDim>().setIdentity();
  out.B.setZero();
  out.B.topRows<kStateDim>() = B;
  return out;
}

GainSchedule riccati_gains(const std::vector<AugMatrix>& A_aug_seq, const AugInputMatrix& B_aug,
                           const TvlqrWeights& w) {
  w.validate();
  const int N = static_cast<int>(A_aug_seq.size());
  if (N < 1) throw std::invalid_argument("riccati_gains: horizon must be at least one step");

  GainSchedule gs;
  gs.gains.resize(N);
  gs.cost_to_go.resize(N + 1);
  gs.cost_to_go[N] = w.Pbar;
  for (int k = N - 1; k >= 0; --k) {
    const AugMatrix& P = gs.cost_to_go[k + 1];
    const AugMatrix& A = A_aug_seq[k];
    const Eigen::Matrix2d S = w.Rbar + B_aug.transpose() * P * B_aug;
    Eigen::LLT<Eigen::Matrix2d> llt(S);
    if (llt.info() != Eigen::Success) {
      throw std::logic_error("riccati_gains: R + B'PB is not positive definite");
    }
    gs.gains[k] = llt.solve(B_aug.transpose() * P * A);
    AugMatrix Pk = w.Qbar + A.transpose() * P * (A - B_aug * gs.gains[k]);
    gs.cost_to_go[k] = 0.5 * (Pk + Pk.transpose());
  }
  return gs;
}

}  // namespace fftrack
