#include "mcsort/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcsort/error.hpp"

namespace mcsort {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Largest alpha in (0, 1] keeping v + alpha * dv >= 0.
double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

// Cholesky of a PSD Newton matrix with escalating diagonal regularization.
class NewtonFactor {
 public:
  NewtonFactor(MatrixXd m, double reg) {
    const Index n = m.rows();
    for (int attempt = 0; attempt < 8; ++attempt) {
      MatrixXd shifted = m;
      shifted.diagonal().array() += reg;
      llt_.compute(shifted);
      if (llt_.info() == Eigen::Success) return;
      reg = std::max(reg * 1e3, 1e-12);
    }
    // last resort: rank-revealing factorization
    use_cod_ = true;
    MatrixXd shifted = m;
    shifted.diagonal().array() += reg;
    cod_.compute(shifted);
    (void)n;
  }
  VectorXd solve(const VectorXd& rhs) const { return use_cod_ ? VectorXd(cod_.solve(rhs)) : VectorXd(llt_.solve(rhs)); }

 private:
  bool use_cod_ = false;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod_;
};

void normalize_shapes(LinearConstraintSet& cs, Index n) {
  if (cs.eq_matrix.rows() == 0) {
    cs.eq_matrix.resize(0, n);
    cs.eq_rhs.resize(0);
  }
  if (cs.in_matrix.rows() == 0) {
    cs.in_matrix.resize(0, n);
    cs.in_rhs.resize(0);
  }
  if (cs.eq_matrix.cols() != n || cs.in_matrix.cols() != n || cs.eq_rhs.size() != cs.eq_matrix.rows() ||
      cs.in_rhs.size() != cs.in_matrix.rows()) {
    throw DimensionError("QP constraint dimensions are inconsistent");
  }
}

}  // namespace

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::unbounded: return "unbounded";
    case QpStatus::max_iterations: return "max_iterations";
  }
  return "max_iterations";
}

QpSolver::QpSolver(MatrixXd p, LinearConstraintSet constraints, QpOptions options)
    : p_(std::move(p)), cons_(std::move(constraints)), opt_(options) {
  const Index n = p_.rows();
  if (p_.cols() != n) throw DimensionError("QP matrix P must be square");
  normalize_shapes(cons_, n);
  const MatrixXd& a = cons_.eq_matrix;
  const VectorXd& b = cons_.eq_rhs;

  has_eq_ = a.rows() > 0;
  if (has_eq_) {
    eq_qr_.setThreshold(1e-10);
    eq_qr_.compute(a.transpose());
    const Index rank = eq_qr_.rank();
    const MatrixXd q = eq_qr_.householderQ();
    null_basis_ = q.rightCols(n - rank);
    if (rank > 0) {
      const MatrixXd range = q.leftCols(rank);
      const MatrixXd a_range = a * range;
      x0_ = range * a_range.colPivHouseholderQr().solve(b);
    } else {
      x0_ = VectorXd::Zero(n);
    }
    if (inf_norm(a * x0_ - b) > 1e-9 * (1.0 + inf_norm(b))) eq_inconsistent_ = true;
    p_red_ = null_basis_.transpose() * p_ * null_basis_;
    p_x0_red_ = null_basis_.transpose() * (p_ * x0_);
  } else {
    x0_ = VectorXd::Zero(n);
    p_red_ = p_;
    p_x0_red_ = VectorXd::Zero(n);
  }

  const MatrixXd g_full = has_eq_ ? MatrixXd(cons_.in_matrix * null_basis_) : cons_.in_matrix;
  const VectorXd h_full = cons_.in_rhs - cons_.in_matrix * x0_;
  std::vector<Index> kept;
  std::vector<double> scale;
  for (Index i = 0; i < g_full.rows(); ++i) {
    const double norm = g_full.row(i).norm();
    const double orig = cons_.in_matrix.row(i).norm();
    if (norm <= 1e-12 * (1.0 + orig)) {
      // row is fixed by the equalities: 0 <= h_i
      if (h_full(i) < -1e-9 * (1.0 + std::abs(cons_.in_rhs(i)))) in_inconsistent_ = true;
      continue;
    }
    kept.push_back(i);
    scale.push_back(norm);
  }
  kept_rows_ = kept;
  row_scale_ = Eigen::Map<const VectorXd>(scale.data(), static_cast<Index>(scale.size()));
  g_red_.resize(static_cast<Index>(kept.size()), g_full.cols());
  h_red_.resize(static_cast<Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    g_red_.row(static_cast<Index>(k)) = g_full.row(kept[k]) / scale[k];
    h_red_(static_cast<Index>(k)) = h_full(kept[k]) / scale[k];
  }
}

QpSolution QpSolver::finish(const VectorXd& q, const VectorXd& w, const VectorXd& z_reduced, QpStatus status,
                            int iterations) const {
  QpSolution sol;
  sol.status = status;
  sol.iterations = iterations;
  sol.x = has_eq_ ? VectorXd(x0_ + null_basis_ * w) : w;
  sol.in_dual = VectorXd::Zero(cons_.in_matrix.rows());
  for (std::size_t k = 0; k < kept_rows_.size(); ++k) {
    sol.in_dual(kept_rows_[k]) = std::max(0.0, z_reduced(static_cast<Index>(k))) / row_scale_(static_cast<Index>(k));
  }
  const VectorXd px = p_ * sol.x;
  VectorXd stat = px + q + cons_.in_matrix.transpose() * sol.in_dual;
  if (has_eq_) {
    sol.eq_dual = eq_qr_.solve(VectorXd(-stat));
    stat += cons_.eq_matrix.transpose() * sol.eq_dual;
  } else {
    sol.eq_dual.resize(0);
  }
  sol.objective = 0.5 * sol.x.dot(px) + q.dot(sol.x);
  sol.dual_objective = -0.5 * sol.x.dot(px) - cons_.eq_rhs.dot(sol.eq_dual) - cons_.in_rhs.dot(sol.in_dual);

  double primal = 0.0, comp = 0.0;
  if (cons_.eq_matrix.rows() > 0) primal = inf_norm(cons_.eq_matrix * sol.x - cons_.eq_rhs);
  if (cons_.in_matrix.rows() > 0) {
    const VectorXd slack = cons_.in_rhs - cons_.in_matrix * sol.x;
    primal = std::max(primal, std::max(0.0, -slack.minCoeff()));
    comp = (sol.in_dual.array() * slack.array()).abs().maxCoeff() / (1.0 + std::abs(sol.objective));
  }
  const double stationarity = inf_norm(stat) / (1.0 + inf_norm(q));
  sol.kkt_residual = std::max({primal, comp, stationarity});
  return sol;
}

QpSolution QpSolver::solve(const VectorXd& q) const {
  const Index n = p_.rows();
  if (q.size() != n) throw DimensionError("QP linear term has the wrong dimension");
  if (eq_inconsistent_ || in_inconsistent_) {
    QpSolution sol;
    sol.status = QpStatus::infeasible;
    sol.x = x0_;
    sol.objective = std::numeric_limits<double>::quiet_NaN();
    sol.kkt_residual = std::numeric_limits<double>::infinity();
    return sol;
  }

  const VectorXd qr = has_eq_ ? VectorXd(null_basis_.transpose() * q + p_x0_red_) : q;
  const MatrixXd& pm = p_red_;
  const MatrixXd& g = g_red_;
  const VectorXd& h = h_red_;
  const Index nr = pm.rows();
  const Index mi = g.rows();

  if (mi == 0) {
    VectorXd w = VectorXd::Zero(nr);
    QpStatus status = QpStatus::optimal;
    if (nr > 0) {
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(pm);
      w = cod.solve(VectorXd(-qr));
      if (inf_norm(pm * w + qr) > 1e-9 * (1.0 + inf_norm(qr))) status = QpStatus::unbounded;
    }
    return finish(q, w, VectorXd(), status, 0);
  }

  // Starting point: least-squares fit of the constraints, then shift s and z
  // into the positive orthant.
  VectorXd w;
  {
    MatrixXd k = pm + g.transpose() * g;
    NewtonFactor f(k, opt_.regularization);
    w = f.solve(VectorXd(-qr + g.transpose() * h));
  }
  VectorXd s = h - g * w;
  VectorXd z = -s;
  if (const double a = -s.minCoeff(); a >= 0.0) s.array() += 1.0 + a;
  if (const double a = -z.minCoeff(); a >= 0.0) z.array() += 1.0 + a;

  const double h_norm = inf_norm(h);
  const double q_norm = inf_norm(qr);
  const double m = static_cast<double>(mi);

  // best iterate by scaled KKT merit, returned if the method stalls
  VectorXd best_w = w, best_z = z;
  double best_merit = std::numeric_limits<double>::infinity();
  int since_best = 0;
  int it = 0;
  for (; it < opt_.max_iterations; ++it) {
    const VectorXd pw = pm * w;
    const VectorXd rd = pw + qr + g.transpose() * z;
    const VectorXd rp = g * w + s - h;
    const double gap = s.dot(z);
    const double mu = gap / m;
    const double pobj = 0.5 * w.dot(pw) + qr.dot(w);

    const double rp_rel = inf_norm(rp) / (1.0 + h_norm);
    const double rd_rel = inf_norm(rd) / (1.0 + q_norm);
    const double gap_rel = gap / std::max(1.0, std::abs(pobj));
    if (rp_rel <= opt_.feasibility_tolerance && rd_rel <= opt_.feasibility_tolerance && gap_rel <= opt_.gap_tolerance) {
      return finish(q, w, z, QpStatus::optimal, it);
    }
    const double merit = std::max({rp_rel, rd_rel, gap_rel});
    if (merit < 0.5 * best_merit) {
      best_merit = merit;
      best_w = w;
      best_z = z;
      since_best = 0;
    } else {
      if (merit < best_merit) {
        best_merit = merit;
        best_w = w;
        best_z = z;
      }
      // stalled near the solution
      if (++since_best >= 15 && best_merit <= 1e-6) break;
    }

    // Divergence: look for certificates of infeasibility / unboundedness.
    if (const double zn = inf_norm(z); zn > 1e8) {
      const VectorXd zh = z / zn;
      const double hz = h.dot(zh);
      if (hz < -1e-8 && inf_norm(g.transpose() * zh) <= 1e-6 * std::abs(hz)) {
        return finish(q, w, z, QpStatus::infeasible, it);
      }
    }
    if (const double wn = inf_norm(w); wn > 1e8) {
      const VectorXd wh = w / wn;
      const double cq = qr.dot(wh);
      if (cq < 0.0 && inf_norm(pm * wh) <= 1e-6 * std::abs(cq) && (g * wh).maxCoeff() <= 1e-6 * std::abs(cq)) {
        return finish(q, w, z, QpStatus::unbounded, it);
      }
    }

    const VectorXd ratio = z.cwiseQuotient(s);
    MatrixXd newton = pm;
    newton.noalias() += g.transpose() * ratio.asDiagonal() * g;
    const NewtonFactor factor(newton, opt_.regularization);

    auto direction = [&](const VectorXd& rsz, VectorXd& dw, VectorXd& ds, VectorXd& dz) {
      const VectorXd rhs = -rd + g.transpose() * (rsz - z.cwiseProduct(rp)).cwiseQuotient(s);
      dw = factor.solve(rhs);
      // one round of iterative refinement against the unregularized system
      dw += factor.solve(VectorXd(rhs - newton * dw));
      ds = -rp - g * dw;
      dz = (-rsz - z.cwiseProduct(ds)).cwiseQuotient(s);
    };

    VectorXd dw, ds, dz;
    direction(s.cwiseProduct(z), dw, ds, dz);
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / m;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const VectorXd rsz = s.cwiseProduct(z) + ds.cwiseProduct(dz) - VectorXd::Constant(mi, sigma * mu);
    direction(rsz, dw, ds, dz);
    double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
    if ((s + alpha * ds).dot(z + alpha * dz) / m > mu) {
      // the second-order term spoiled the step; retry with plain centering
      const VectorXd centered = s.cwiseProduct(z) - VectorXd::Constant(mi, std::max(sigma, 0.1) * mu);
      direction(centered, dw, ds, dz);
      alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
    }

    w += alpha * dw;
    s += alpha * ds;
    z += alpha * dz;
  }
  return finish(q, best_w, best_z, QpStatus::max_iterations, it);
}

QpSolution solve_qp(const QpProblem& problem, const QpOptions& options) {
  return QpSolver(problem.p, problem.constraints, options).solve(problem.q);
}

QpSolution solve_lp(const VectorXd& c, const LinearConstraintSet& constraints, const QpOptions& options) {
  const Index n = c.size();
  return QpSolver(MatrixXd::Zero(n, n), constraints, options).solve(c);
}

}  // namespace mcsort
