#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fftrack {

/// minimize 0.5 x'Hx + F'x + Y  subject to  G_I x <= h,  G_E x = b.
struct QuadraticProgram {
  Eigen::MatrixXd H;
  Eigen::VectorXd F;
  double Y = 0.0;
  Eigen::MatrixXd G_I;  // m x n, may have zero rows
  Eigen::VectorXd h;
  Eigen::MatrixXd G_E;  // p x n, may have zero rows
  Eigen::VectorXd b;

  int num_variables() const { return static_cast<int>(H.rows()); }
  int num_inequalities() const { return static_cast<int>(G_I.rows()); }
  int num_equalities() const { return static_cast<int>(G_E.rows()); }

  double objective(const Eigen::VectorXd& x) const;

  /// Throws std::invalid_argument on inconsistent dimensions or a Hessian
  /// that is not symmetric to 1e-12 (relative to its largest entry).
  void validate() const;
};

struct QpSolution {
  Eigen::VectorXd x_star;
  double objective = 0.0;
  std::vector<int> active_set;  // tight inequalities, ascending
  Eigen::VectorXd dual_ineq;    // one per inequality row, >= 0
  Eigen::VectorXd dual_eq;      // one per equality row
  int iterations = 0;
};

enum class QpStatus { kInfeasible, kNotStrictlyConvex, kIterationLimit };

const char* to_string(QpStatus status);

class QpError : public std::runtime_error {
 public:
  QpError(QpStatus status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  QpStatus status() const { return status_; }

 private:
  QpStatus status_;
};

struct QpOptions {
  double pd_tol = 1e-10;
  /// Iteration cap as a multiple of (n + m).
  int iteration_factor = 50;
  /// Inequality indices tried first when picking the next violated
  /// constraint (warm start). Does not change the optimum, only the path.
  std::vector<int> active_set_hint;
};

constexpr double kKktTol = 1e-8;

/// True iff an unpivoted LDL' factorization of the symmetric matrix H runs
/// to completion with every pivot above pd_tol. Throws on asymmetric input.
bool check_strict_convexity(const Eigen::MatrixXd& H, double pd_tol = 1e-10);

/// Dual active-set method for strictly convex QPs. The unconstrained
/// minimizer is the starting point; violated constraints are added one at
/// a time (most violated first, lowest index on ties) while dual
/// feasibility is maintained, so the first primal-feasible iterate is the
/// optimum.
QpSolution solve(const QuadraticProgram& qp, const QpOptions& options = {});

struct KktResidual {
  double stationarity = 0.0;
  double primal_violation = 0.0;
  double comp_slack = 0.0;
  /// Most negative inequality multiplier, reported as a positive number.
  double dual_violation = 0.0;

  double max() const;
};

/// Infinity norms of H x + F + G_I' lambda + G_E' mu, of the constraint
/// violations (positive part for inequalities, absolute value for
/// equalities), and of lambda_i * (G_I x - h)_i.
KktResidual kkt_residual(const QuadraticProgram& qp, const QpSolution& sol);

/// Plain-text dump: named blocks, each a header line `name rows cols`
/// followed by row-major values at full precision.
void dump_qp(std::ostream& os, const QuadraticProgram& qp);
QuadraticProgram load_qp(std::istream& is);

}  // namespace fftrack
