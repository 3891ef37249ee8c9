#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "fftrack/vehicle_model.hpp"

namespace fftrack {

constexpr int kAugDim = 2 * kStateDim;

using AugState = Eigen::Matrix<double, kAugDim, 1>;
using AugMatrix = Eigen::Matrix<double, kAugDim, kAugDim>;
using AugInputMatrix = Eigen::Matrix<double, kAugDim, kInputDim>;
using GainMatrix = Eigen::Matrix<double, kInputDim, kAugDim>;

/// Tracking error x - x_hat stacked with the error integrator.
struct ErrorState {
  VehicleState x_tilde = VehicleState::Zero();
  VehicleState v_tilde = VehicleState::Zero();

  AugState stacked() const {
    AugState z;
    z << x_tilde, v_tilde;
    return z;
  }
};

struct TvlqrWeights {
  AugMatrix Qbar = AugMatrix::Zero();  // PSD
  Eigen::Matrix2d Rbar = Eigen::Matrix2d::Identity();  // PD
  AugMatrix Pbar = AugMatrix::Identity();  // PD terminal weight

  /// Pbar defaults to Qbar + ridge * I.
  static TvlqrWeights from_diagonals(const AugState& q_diag, const ControlInput& r_diag,
                                     double terminal_ridge = 1e-6);
  void validate() const;
};

struct GainSchedule {
  std::vector<GainMatrix> gains;      // K(0..N-1)
  std::vector<AugMatrix> cost_to_go;  // P(0..N)

  int horizon() const { return static_cast<int>(gains.size()); }
};

/// Jacobian with respect to x of the Euler-discretized nonlinear step,
/// evaluated at x_hat. Throws std::domain_error for |delta| >= pi/2.
StateMatrix error_jacobian(const VehicleState& x_hat, const ModelParams& p);

struct AugmentedDynamics {
  AugMatrix A;
  AugInputMatrix B;
};

/// [[A_fb, 0], [C, I]] and [B; 0].
AugmentedDynamics augment_dynamics(const StateMatrix& A_fb, const InputMatrix& B,
                                   const StateMatrix& C);

/// Backward Riccati recursion for the finite-horizon problem
///   sum_k |z(k)|^2_Qbar + |u(k)|^2_Rbar + |z(N)|^2_Pbar.
GainSchedule riccati_gains(const std::vector<AugMatrix>& A_aug_seq, const AugInputMatrix& B_aug,
                           const TvlqrWeights& w);

inline ControlInput feedback(const GainMatrix& K, const AugState& z) { return -K * z; }
inline ControlInput feedback(const GainMatrix& K, const ErrorState& e) {
  return feedback(K, e.stacked());
}

/// Holder for a value published by one thread and read by another. A reader
/// always sees a complete value: either the one before or the one after a
/// publish, never a mixture.
template <class T>
class SnapshotSlot {
 public:
  void publish(std::shared_ptr<const T> value) {
    std::lock_guard<std::mutex> lock(mutex_);
    current_ = std::move(value);
  }
  std::shared_ptr<const T> current() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return current_;
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const T> current_;
};

using ScheduleSlot = SnapshotSlot<GainSchedule>;

}  // namespace fftrack
