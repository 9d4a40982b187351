#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "mcsort/model.hpp"

namespace mcsort {

enum class QpStatus { optimal, infeasible, unbounded, max_iterations };

std::string_view to_string(QpStatus status);

struct QpOptions {
  double gap_tolerance = 1e-8;
  double feasibility_tolerance = 1e-9;
  int max_iterations = 200;
  /// Diagonal regularization of the Newton system.
  double regularization = 1e-10;
};

/// minimize 1/2 x^T P x + q^T x  subject to  A_eq x = b_eq,  A_in x <= b_in.
struct QpProblem {
  Eigen::MatrixXd p;
  Eigen::VectorXd q;
  LinearConstraintSet constraints;
};

struct QpSolution {
  QpStatus status = QpStatus::max_iterations;
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Lagrangian dual value at the returned multipliers.
  double dual_objective = 0.0;
  Eigen::VectorXd eq_dual;
  Eigen::VectorXd in_dual;
  /// max of primal infeasibility, stationarity and complementarity residuals
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// A QP with fixed quadratic term and constraints whose linear term may
/// change between solves. Equality constraints are eliminated once through
/// a null-space basis; the reduced data is reused by every solve.
class QpSolver {
 public:
  QpSolver(Eigen::MatrixXd p, LinearConstraintSet constraints, QpOptions options = {});

  QpSolution solve(const Eigen::VectorXd& q) const;

  std::size_t dimension() const { return static_cast<std::size_t>(p_.rows()); }

 private:
  QpSolution finish(const Eigen::VectorXd& q, const Eigen::VectorXd& w, const Eigen::VectorXd& z_reduced,
                    QpStatus status, int iterations) const;

  Eigen::MatrixXd p_;
  LinearConstraintSet cons_;
  QpOptions opt_;

  bool eq_inconsistent_ = false;
  bool in_inconsistent_ = false;
  bool has_eq_ = false;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> eq_qr_;  // of A_eq^T
  Eigen::MatrixXd null_basis_;                          // N
  Eigen::VectorXd x0_;                                  // particular solution
  Eigen::MatrixXd p_red_;                               // N^T P N
  Eigen::VectorXd p_x0_red_;                            // N^T P x0
  Eigen::MatrixXd g_red_;                               // scaled rows of A_in N
  Eigen::VectorXd h_red_;
  std::vector<Eigen::Index> kept_rows_;
  Eigen::VectorXd row_scale_;
};

QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {});

/// minimize c^T x subject to the constraints. Unboundedness is reported as
/// QpStatus::unbounded.
QpSolution solve_lp(const Eigen::VectorXd& c, const LinearConstraintSet& constraints, const QpOptions& options = {});

}  // namespace mcsort
