#include "fftrack/qp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Jacobi>

namespace fftrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Working state of the Goldfarb-Idnani iteration. Constraints are handled in
// the form a'x >= c; an inequality row g'x <= h becomes (-g)'x >= -h. Active
// constraints are identified by id: inequality i -> i, equality e -> -(e+1).
//
// Invariants: J = L^{-T} Q with H = L L', and J' N = [R; 0] for the matrix N
// whose columns are the active normals, R upper triangular (iq x iq).
class DualActiveSet {
 public:
  DualActiveSet(const QuadraticProgram& qp, const QpOptions& options)
      : qp_(qp),
        n_(qp.num_variables()),
        m_(qp.num_inequalities()),
        p_(qp.num_equalities()),
        options_(options) {}

  QpSolution run();

 private:
  Eigen::VectorXd normal(int id) const {
    return id < 0 ? Eigen::VectorXd(qp_.G_E.row(-id - 1).transpose())
                  : Eigen::VectorXd(-qp_.G_I.row(id).transpose());
  }
  double rhs(int id) const { return id < 0 ? qp_.b[-id - 1] : -qp_.h[id]; }
  double slack(int id) const { return normal(id).dot(x_) - rhs(id); }

  // d = J' np, z = J2 d2 (primal direction), r = R^{-1} d1 (dual direction).
  void compute_directions(const Eigen::VectorXd& np) {
    d_.noalias() = J_.transpose() * np;
    const int free = n_ - iq_;
    z_.noalias() = J_.rightCols(free) * d_.tail(free);
    r_.head(iq_) = R_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d_.head(iq_));
  }

  bool add_constraint();
  void delete_constraint(int id);
  int pick_violated(const std::vector<char>& excluded) const;
  void count_iteration() {
    if (++iterations_ > max_iterations_) {
      throw QpError(QpStatus::kIterationLimit,
                    "QP iteration limit " + std::to_string(max_iterations_) + " reached (n=" +
                        std::to_string(n_) + ", m=" + std::to_string(m_) +
                        ", active=" + std::to_string(iq_) + ")");
    }
  }

  const QuadraticProgram& qp_;
  const int n_, m_, p_;
  const QpOptions& options_;

  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd d_, z_, r_, u_, x_;
  std::vector<int> active_;
  std::vector<char> is_active_;
  std::vector<char> hinted_;
  int iq_ = 0;
  double r_norm_ = 1.0;
  int iterations_ = 0;
  int max_iterations_ = 0;
};

bool DualActiveSet::add_constraint() {
  for (int j = n_ - 1; j >= iq_ + 1; --j) {
    if (d_[j] == 0.0) continue;
    Eigen::JacobiRotation<double> g;
    double r = 0.0;
    g.makeGivens(d_[j - 1], d_[j], &r);
    d_[j - 1] = r;
    d_[j] = 0.0;
    J_.applyOnTheRight(j - 1, j, g);
  }
  ++iq_;
  R_.col(iq_ - 1).head(iq_) = d_.head(iq_);
  if (std::abs(d_[iq_ - 1]) <= kEps * r_norm_) return false;
  r_norm_ = std::max(r_norm_, std::abs(d_[iq_ - 1]));
  return true;
}

void DualActiveSet::delete_constraint(int id) {
  const auto it = std::find(active_.begin(), active_.end(), id);
  const int qq = static_cast<int>(it - active_.begin());
  active_.erase(it);
  if (id >= 0) is_active_[id] = 0;
  // u_ carries one extra slot for the constraint currently being added.
  for (int k = qq; k < iq_; ++k) u_[k] = u_[k + 1];
  u_[iq_] = 0.0;

  for (int k = qq; k < iq_ - 1; ++k) R_.col(k).head(iq_) = R_.col(k + 1).head(iq_);
  R_.col(iq_ - 1).setZero();
  --iq_;

  for (int j = qq; j < iq_; ++j) {
    const double a = R_(j, j);
    const double b = R_(j + 1, j);
    if (b == 0.0) continue;
    Eigen::JacobiRotation<double> g;
    g.makeGivens(a, b);
    R_.applyOnTheLeft(j, j + 1, g.adjoint());
    R_(j + 1, j) = 0.0;
    J_.applyOnTheRight(j, j + 1, g);
  }
}

int DualActiveSet::pick_violated(const std::vector<char>& excluded) const {
  // Most violated first; among hinted constraints first when a hint is given.
  // Strict comparison in ascending index order breaks ties by lowest index.
  int best = -1;
  double best_violation = 0.0;
  bool best_hinted = false;
  const Eigen::VectorXd gx = qp_.G_I * x_;
  for (int i = 0; i < m_; ++i) {
    if (is_active_[i] || excluded[i]) continue;
    const double violation = gx[i] - qp_.h[i];
    const double scale = 1.0 + std::abs(qp_.h[i]) + qp_.G_I.row(i).cwiseAbs().dot(x_.cwiseAbs());
    if (!(violation > 1e-13 * scale)) continue;
    const bool hinted = hinted_[i] != 0;
    if (best < 0 || (hinted && !best_hinted) ||
        (hinted == best_hinted && violation > best_violation)) {
      best = i;
      best_violation = violation;
      best_hinted = hinted;
    }
  }
  return best;
}

QpSolution DualActiveSet::run() {
  max_iterations_ = options_.iteration_factor * (n_ + m_);
  is_active_.assign(m_, 0);
  hinted_.assign(m_, 0);
  for (int i : options_.active_set_hint) {
    if (i >= 0 && i < m_) hinted_[i] = 1;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(qp_.H);
  if (llt.info() != Eigen::Success) {
    throw QpError(QpStatus::kNotStrictlyConvex, "Cholesky factorization of H failed");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  J_ = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n_, n_));
  R_ = Eigen::MatrixXd::Zero(n_, n_);
  d_ = Eigen::VectorXd::Zero(n_);
  z_ = Eigen::VectorXd::Zero(n_);
  r_ = Eigen::VectorXd::Zero(n_ + 1);
  u_ = Eigen::VectorXd::Zero(n_ + 1);
  x_ = -llt.solve(qp_.F);
  active_.clear();
  active_.reserve(n_);

  for (int e = 0; e < p_; ++e) {
    const int id = -(e + 1);
    const Eigen::VectorXd np = normal(id);
    compute_directions(np);
    double t = 0.0;
    const double zn = z_.dot(np);
    if (z_.squaredNorm() > kEps) t = -slack(id) / zn;
    x_ += t * z_;
    u_[iq_] = t;
    u_.head(iq_) -= t * r_.head(iq_);
    active_.push_back(id);
    if (!add_constraint()) {
      throw QpError(QpStatus::kInfeasible, "equality constraints are linearly dependent");
    }
    count_iteration();
  }

  std::vector<char> excluded(m_, 0);
  for (;;) {
    const int ip = pick_violated(excluded);
    if (ip < 0) break;

    const Eigen::VectorXd x_saved = x_;
    const Eigen::VectorXd u_saved = u_;
    const std::vector<int> active_saved = active_;

    const Eigen::VectorXd np = normal(ip);
    u_[iq_] = 0.0;
    double s_p = slack(ip);
    for (;;) {
      count_iteration();
      compute_directions(np);

      // Largest dual step keeping active inequality multipliers nonnegative.
      double t1 = kInf;
      int drop = 0;
      for (int k = p_; k < iq_; ++k) {
        if (r_[k] > 0.0) {
          const double ratio = u_[k] / r_[k];
          if (ratio < t1) {
            t1 = ratio;
            drop = active_[k];
          }
        }
      }
      // Full primal step that makes constraint ip tight.
      const double zn = z_.dot(np);
      const double t2 = (std::abs(zn) > kEps * std::max(1.0, np.squaredNorm())) ? -s_p / zn : kInf;
      const double t = std::min(t1, t2);

      if (t == kInf) {
        throw QpError(QpStatus::kInfeasible,
                      "QP is infeasible: inequality " + std::to_string(ip) +
                          " cannot be satisfied together with the active set (violation " +
                          std::to_string(-s_p) + ")");
      }

      if (t2 == kInf) {
        // Dual-only step: no primal direction left, shift the multipliers.
        u_.head(iq_) -= t * r_.head(iq_);
        u_[iq_] += t;
        delete_constraint(drop);
        continue;
      }

      x_ += t * z_;
      u_.head(iq_) -= t * r_.head(iq_);
      u_[iq_] += t;

      if (t == t2) {
        active_.push_back(ip);
        is_active_[ip] = 1;
        if (!add_constraint()) {
          // Numerically dependent normal: undo and skip this constraint.
          delete_constraint(ip);
          x_ = x_saved;
          u_ = u_saved;
          for (int id : active_) {
            if (id >= 0) is_active_[id] = 0;
          }
          active_ = active_saved;
          for (int id : active_) {
            if (id >= 0) is_active_[id] = 1;
          }
          excluded[ip] = 1;
        }
        break;
      }

      delete_constraint(drop);
      s_p = slack(ip);
    }
  }

  for (int i = 0; i < m_; ++i) {
    if (excluded[i] && qp_.G_I.row(i).dot(x_) - qp_.h[i] > kKktTol) {
      throw QpError(QpStatus::kInfeasible,
                    "inequality " + std::to_string(i) +
                        " is linearly dependent on the active set and remains violated");
    }
  }

  QpSolution sol;
  sol.x_star = x_;
  sol.dual_ineq = Eigen::VectorXd::Zero(m_);
  sol.dual_eq = Eigen::VectorXd::Zero(p_);
  for (int k = 0; k < iq_; ++k) {
    const int id = active_[k];
    if (id < 0) {
      sol.dual_eq[-id - 1] = -u_[k];
    } else {
      sol.dual_ineq[id] = u_[k];
      sol.active_set.push_back(id);
    }
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.objective = qp_.objective(x_);
  sol.iterations = iterations_;
  return sol;
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::kInfeasible:
      return "Infeasible";
    case QpStatus::kNotStrictlyConvex:
      return "NotStrictlyConvex";
    case QpStatus::kIterationLimit:
      return "IterationLimit";
  }
  return "Unknown";
}

double QuadraticProgram::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(H * x) + F.dot(x) + Y;
}

void QuadraticProgram::validate() const {
  const Eigen::Index n = H.rows();
  if (H.cols() != n || F.size() != n) throw std::invalid_argument("QP: H and F sizes disagree");
  if (G_I.rows() != h.size() || (G_I.rows() > 0 && G_I.cols() != n)) {
    throw std::invalid_argument("QP: inequality block has inconsistent dimensions");
  }
  if (G_E.rows() != b.size() || (G_E.rows() > 0 && G_E.cols() != n)) {
    throw std::invalid_argument("QP: equality block has inconsistent dimensions");
  }
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("QP: Hessian is not symmetric");
  }
}

bool check_strict_convexity(const Eigen::MatrixXd& H, double pd_tol) {
  const Eigen::Index n = H.rows();
  if (H.cols() != n) throw std::invalid_argument("check_strict_convexity: H is not square");
  if (n == 0) return true;
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("check_strict_convexity: H is not symmetric");
  }
  // Unpivoted LDL': L unit lower triangular, pivots in d.
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd d(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double dj = H(j, j);
    for (Eigen::Index k = 0; k < j; ++k) dj -= L(j, k) * L(j, k) * d[k];
    if (!(dj > pd_tol)) return false;
    d[j] = dj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = H(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= L(i, k) * L(j, k) * d[k];
      L(i, j) = v / dj;
    }
  }
  return true;
}

QpSolution solve(const QuadraticProgram& qp, const QpOptions& options) {
  qp.validate();
  if (!check_strict_convexity(qp.H, options.pd_tol)) {
    throw QpError(QpStatus::kNotStrictlyConvex, "QP Hessian is not positive definite");
  }
  DualActiveSet solver(qp, options);
  return solver.run();
}

double KktResidual::max() const {
  return std::max({stationarity, primal_violation, comp_slack, dual_violation});
}

KktResidual kkt_residual(const QuadraticProgram& qp, const QpSolution& sol) {
  KktResidual res;
  const Eigen::VectorXd& x = sol.x_star;
  Eigen::VectorXd grad = qp.H * x + qp.F;
  if (qp.num_inequalities() > 0) {
    grad += qp.G_I.transpose() * sol.dual_ineq;
    const Eigen::VectorXd slack = qp.G_I * x - qp.h;
    res.primal_violation = std::max(0.0, slack.maxCoeff());
    res.comp_slack = sol.dual_ineq.cwiseProduct(slack).cwiseAbs().maxCoeff();
    res.dual_violation = std::max(0.0, -sol.dual_ineq.minCoeff());
  }
  if (qp.num_equalities() > 0) {
    grad += qp.G_E.transpose() * sol.dual_eq;
    res.primal_violation =
        std::max(res.primal_violation, (qp.G_E * x - qp.b).cwiseAbs().maxCoeff());
  }
  res.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  return res;
}

namespace {

void write_block(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ' ';
      os << m(i, j);
    }
    os << '\n';
  }
}

Eigen::MatrixXd read_block(std::istream& is, const std::string& expected) {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> name >> rows >> cols) || name != expected || rows < 0 || cols < 0) {
    throw std::invalid_argument("QP dump: expected block '" + expected + "'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(is >> m(i, j))) throw std::invalid_argument("QP dump: truncated block '" + expected + "'");
    }
  }
  return m;
}

}  // namespace

void dump_qp(std::ostream& os, const QuadraticProgram& qp) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "# minimize 0.5 x'Hx + F'x + Y  s.t.  G_I x <= h,  G_E x = b\n";
  write_block(os, "H", qp.H);
  write_block(os, "F", qp.F);
  write_block(os, "Y", Eigen::MatrixXd::Constant(1, 1, qp.Y));
  write_block(os, "G_I", qp.G_I.rows() > 0 ? qp.G_I : Eigen::MatrixXd(0, qp.H.cols()));
  write_block(os, "h", qp.h);
  write_block(os, "G_E", qp.G_E.rows() > 0 ? qp.G_E : Eigen::MatrixXd(0, qp.H.cols()));
  write_block(os, "b", qp.b);
  os.flags(flags);
  os.precision(prec);
}

QuadraticProgram load_qp(std::istream& is) {
  std::string line;
  while (is.peek() == '#') std::getline(is, line);
  QuadraticProgram qp;
  qp.H = read_block(is, "H");
  qp.F = read_block(is, "F");
  qp.Y = read_block(is, "Y")(0, 0);
  qp.G_I = read_block(is, "G_I");
  qp.h = read_block(is, "h");
  qp.G_E = read_block(is, "G_E");
  qp.b = read_block(is, "b");
  qp.validate();
  return qp;
}

}  // namespace fftrack
