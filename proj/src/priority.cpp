#include "mcsort/priority.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "mcsort/assigner.hpp"
#include "mcsort/error.hpp"
#include "mcsort/metrics.hpp"
#include "mcsort/qp.hpp"

namespace mcsort {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kActiveTolerance = 1e-8;
constexpr double kMinSlope = 1e-10;
// Below this the LP optimum of the normalized problem is solver noise.
constexpr double kLpNoise = 1e-8;

// Orthogonal projection of d onto the null space of `rows`.
VectorXd project_to_null_space(const MatrixXd& rows, const VectorXd& d) {
  if (rows.rows() == 0) return d;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(rows.transpose());
  const VectorXd coef = cod.solve(d);
  return d - rows.transpose() * coef;
}

struct PrefixLp {
  VectorXd d;
  double t = 0.0;
  bool ok = false;
};

// maximize t s.t. t <= g_s^T d for the given rows, A_eq d = 0, A_act d <= 0,
// |d_j| <= 1. Variables are (d, t).
PrefixLp solve_prefix_lp(const MatrixXd& grads, const MatrixXd& eq_rows, const MatrixXd& active_rows) {
  const Index n = grads.cols();
  const Index k = grads.rows();
  LinearConstraintSet cons;
  cons.eq_matrix = MatrixXd::Zero(eq_rows.rows(), n + 1);
  cons.eq_matrix.leftCols(n) = eq_rows;
  cons.eq_rhs = VectorXd::Zero(eq_rows.rows());
  const Index rows = k + active_rows.rows() + 2 * n;
  cons.in_matrix = MatrixXd::Zero(rows, n + 1);
  cons.in_rhs = VectorXd::Zero(rows);
  cons.in_matrix.topLeftCorner(k, n) = -grads;
  cons.in_matrix.block(0, n, k, 1).setOnes();
  cons.in_matrix.block(k, 0, active_rows.rows(), n) = active_rows;
  const Index box = k + active_rows.rows();
  cons.in_matrix.block(box, 0, n, n) = MatrixXd::Identity(n, n);
  cons.in_matrix.block(box + n, 0, n, n) = -MatrixXd::Identity(n, n);
  cons.in_rhs.tail(2 * n).setOnes();
  VectorXd c = VectorXd::Zero(n + 1);
  c(n) = -1.0;
  const QpSolution sol = solve_lp(c, cons);
  PrefixLp out;
  if (sol.status != QpStatus::optimal) {
    if (sol.status == QpStatus::infeasible || sol.status == QpStatus::unbounded) {
      throw SolverError(std::string("ascent-direction LP ended with status ") + std::string(to_string(sol.status)));
    }
    if (sol.kkt_residual > 1e-6) throw SolverError("ascent-direction LP did not converge");
  }
  out.d = sol.x.head(n);
  out.t = sol.x(n);
  out.ok = true;
  return out;
}

std::vector<std::size_t> reference_minus(const std::vector<std::size_t>& ref, const std::vector<std::size_t>& drop) {
  std::vector<std::size_t> sorted_drop = drop;
  std::sort(sorted_drop.begin(), sorted_drop.end());
  std::vector<std::size_t> out;
  for (std::size_t i : ref) {
    if (!std::binary_search(sorted_drop.begin(), sorted_drop.end(), i)) out.push_back(i);
  }
  return out;
}

nlohmann::json to_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json to_json(const ClassPerformance& p) { return {{"card_pf", p.card_pf}, {"ord_pf", p.ord_pf}}; }

}  // namespace

ClassPerformance class_performance(const std::vector<ValuedAssignment>& actual,
                                   const std::vector<ValuedAssignment>& predicted) {
  if (actual.size() != predicted.size()) throw DimensionError("actual and predicted lists differ in length");
  if (actual.empty()) throw InsufficientDataError("class performance needs at least one alternative");
  const std::size_t q = actual.front().num_classes();
  ClassPerformance p;
  p.card_pf.assign(q, 0.0);
  p.ord_pf.assign(q, 0.0);
  std::vector<std::size_t> pos_a(q), pos_p(q);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i].num_classes() != q || predicted[i].num_classes() != q) {
      throw DimensionError("credibility vectors have different lengths");
    }
    const auto la = ranking_list(actual[i]);
    const auto lp = ranking_list(predicted[i]);
    for (std::size_t k = 0; k < q; ++k) {
      pos_a[la[k]] = k;
      pos_p[lp[k]] = k;
    }
    for (std::size_t r = 0; r < q; ++r) {
      p.card_pf[r] += std::abs(actual[i][r] - predicted[i][r]);
      p.ord_pf[r] += std::abs(static_cast<double>(pos_a[r]) - static_cast<double>(pos_p[r]));
    }
  }
  const double m = static_cast<double>(actual.size());
  for (std::size_t r = 0; r < q; ++r) {
    p.card_pf[r] /= m;
    p.ord_pf[r] /= (static_cast<double>(q) - 1.0) * m;
  }
  return p;
}

std::vector<ValuedAssignment> predict_reference(const FittedModel& model, const SortingProblem& problem) {
  const ReferenceSet ref = ReferenceSet::from_problem(model, problem);
  std::vector<ValuedAssignment> out;
  out.reserve(ref.values.size());
  for (double v : ref.values) out.push_back(assign_soft(gamma_profile(ref, v)));
  return out;
}

ClassPerformance reference_performance(const FittedModel& model, const SortingProblem& problem) {
  std::vector<ValuedAssignment> actual;
  for (std::size_t i : problem.reference) actual.push_back(problem.sigma(i));
  return class_performance(actual, predict_reference(model, problem));
}

ConsistencyScores class_consistency_scores(const FittedModel& model, const SortingProblem& problem) {
  const std::size_t q = problem.num_classes;
  const MatrixXd v = build_feature_matrix(model.spec, problem.performances, problem.reference, LevelLookup::interpolate);
  const Index dim = v.rows();
  // mass[s] = sum_i sigma_s(i), weighted[s] = sum_i sigma_s(i) V(a_i)
  VectorXd mass = VectorXd::Zero(static_cast<Index>(q));
  MatrixXd weighted = MatrixXd::Zero(dim, static_cast<Index>(q));
  for (std::size_t k = 0; k < problem.reference.size(); ++k) {
    const auto& sigma = problem.sigma(problem.reference[k]);
    for (std::size_t s = 0; s < q; ++s) {
      mass(static_cast<Index>(s)) += sigma[s];
      weighted.col(static_cast<Index>(s)) += sigma[s] * v.col(static_cast<Index>(k));
    }
  }
  ConsistencyScores out;
  out.gradients = MatrixXd::Zero(static_cast<Index>(q), dim);
  for (Index s = 0; s < static_cast<Index>(q); ++s) {
    VectorXd g = VectorXd::Zero(dim);
    for (Index r = 0; r < s; ++r) g += mass(r) * weighted.col(s) - mass(s) * weighted.col(r);
    for (Index r = s + 1; r < static_cast<Index>(q); ++r) g += mass(s) * weighted.col(r) - mass(r) * weighted.col(s);
    out.gradients.row(s) = g.transpose();
  }
  out.values = out.gradients * model.theta;
  return out;
}

PriorityRanking PriorityRanking::from_order(std::vector<std::size_t> order, std::size_t q) {
  if (order.size() != q) throw ParameterError("priority ranking must list every class once");
  std::vector<bool> seen(q, false);
  for (std::size_t c : order) {
    if (c < 1 || c > q || seen[c - 1]) throw ParameterError("priority ranking must be a permutation of 1..q");
    seen[c - 1] = true;
  }
  return PriorityRanking{std::move(order)};
}

AscentDirection find_ascent_direction(const MatrixXd& gradients, const PriorityRanking& tau, const VectorXd& theta,
                                      const LinearConstraintSet& constraints) {
  const Index n = theta.size();
  if (gradients.cols() != n) throw DimensionError("gradient width does not match theta");
  const MatrixXd eq_rows = constraints.eq_matrix.rows() > 0 ? constraints.eq_matrix : MatrixXd(0, n);
  std::vector<Index> active;
  if (constraints.in_matrix.rows() > 0) {
    const VectorXd slack = constraints.in_rhs - constraints.in_matrix * theta;
    for (Index i = 0; i < slack.size(); ++i) {
      if (slack(i) <= kActiveTolerance) active.push_back(i);
    }
  }
  MatrixXd active_rows(static_cast<Index>(active.size()), n);
  for (std::size_t k = 0; k < active.size(); ++k) active_rows.row(static_cast<Index>(k)) = constraints.in_matrix.row(active[k]);

  double scale = 0.0;
  for (std::size_t c : tau.order) scale = std::max(scale, gradients.row(static_cast<Index>(c - 1)).lpNorm<Eigen::Infinity>());

  AscentDirection out;
  out.d = VectorXd::Zero(n);
  if (scale == 0.0) return out;

  for (std::size_t k = tau.order.size(); k >= 1; --k) {
    MatrixXd g(static_cast<Index>(k), n);
    for (std::size_t s = 0; s < k; ++s) g.row(static_cast<Index>(s)) = gradients.row(static_cast<Index>(tau.order[s] - 1)) / scale;
    const PrefixLp lp = solve_prefix_lp(g, eq_rows, active_rows);
    if (lp.t < kLpNoise) continue;
    // Snap d onto the face of the equalities and the active rows it touches.
    std::vector<Index> tight;
    for (Index i = 0; i < active_rows.rows(); ++i) {
      if (active_rows.row(i).dot(lp.d) >= -kLpNoise * (1.0 + active_rows.row(i).lpNorm<1>())) tight.push_back(i);
    }
    MatrixXd face(eq_rows.rows() + static_cast<Index>(tight.size()), n);
    face.topRows(eq_rows.rows()) = eq_rows;
    for (std::size_t i = 0; i < tight.size(); ++i) face.row(eq_rows.rows() + static_cast<Index>(i)) = active_rows.row(tight[i]);
    VectorXd d = project_to_null_space(face, lp.d);
    if (const double big = d.lpNorm<Eigen::Infinity>(); big > 1.0) d /= big;
    double slope = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < k; ++s) slope = std::min(slope, gradients.row(static_cast<Index>(tau.order[s] - 1)).dot(d));
    if (slope < kMinSlope || d.lpNorm<Eigen::Infinity>() == 0.0) continue;
    out.d = d;
    out.prefix = k;
    out.min_slope = slope;
    return out;
  }
  return out;
}

StepLength line_search(const VectorXd& theta, const VectorXd& d, const LinearConstraintSet& constraints,
                       double lambda_max) {
  double best = std::numeric_limits<double>::infinity();
  if (constraints.in_matrix.rows() > 0) {
    const VectorXd ad = constraints.in_matrix * d;
    const VectorXd slack = constraints.in_rhs - constraints.in_matrix * theta;
    for (Index i = 0; i < ad.size(); ++i) {
      if (ad(i) <= 1e-11 * (1.0 + constraints.in_matrix.row(i).lpNorm<1>())) continue;
      best = std::min(best, std::max(0.0, slack(i)) / ad(i));
    }
  }
  if (std::isinf(best)) return {lambda_max, true};
  return {std::min(best, lambda_max), false};
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::zero_direction: return "zero_direction";
    case Termination::zero_step: return "zero_step";
    case Termination::complexity_cap: return "complexity_cap";
    case Termination::iteration_cap: return "iteration_cap";
    case Termination::validation_stop: return "validation_stop";
  }
  return "iteration_cap";
}

void AdjustmentTrace::write_jsonl(std::ostream& out) const {
  nlohmann::json head = {{"omega_initial", omega_initial},
                         {"termination", std::string(to_string(termination))},
                         {"consistency", to_json(initial_consistency)},
                         {"performance", to_json(initial_performance)}};
  out << head.dump() << '\n';
  for (const auto& r : records) {
    nlohmann::json line = {{"iteration", r.iteration},
                           {"prefix", r.prefix},
                           {"selected", r.selected},
                           {"lambda", r.lambda},
                           {"lambda_capped", r.lambda_capped},
                           {"omega_before", r.omega_before},
                           {"omega_after", r.omega_after},
                           {"accepted", r.accepted},
                           {"direction", to_json(r.d)},
                           {"consistency", to_json(r.consistency)},
                           {"performance", to_json(r.performance)}};
    out << line.dump() << '\n';
  }
}

AdjustResult adjust(const FittedModel& model, const SortingProblem& problem, const PriorityRanking& tau,
                    const AdjustOptions& options) {
  if (!(options.zeta >= 0.0)) throw ParameterError("complexity threshold must be nonnegative");
  if (tau.order.size() != problem.num_classes) throw ParameterError("priority ranking has the wrong length");

  SortingProblem work = problem;
  const bool validating = !options.validation.empty();
  if (validating) {
    work = problem.with_split(reference_minus(problem.reference, options.validation), options.validation);
  }
  const LinearConstraintSet cons = build_base_constraints(model.spec);
  const ComplexityForm omega = build_complexity_form(model.spec, model.multipliers);
  // O_s is linear in theta, so its gradients are fixed for the whole run.
  const MatrixXd gradients = class_consistency_scores(model, work).gradients;

  auto validation_card = [&](const FittedModel& m) {
    const ReferenceSet ref = ReferenceSet::from_problem(m, work);
    std::vector<ValuedAssignment> actual, predicted;
    for (std::size_t i : work.test) {
      actual.push_back(work.sigma(i));
      predicted.push_back(assign_soft(gamma_profile(ref, m.value(work.row(i)))));
    }
    return class_performance(actual, predicted).card_pf;
  };

  AdjustResult result;
  result.model = model;
  auto& trace = result.trace;
  trace.omega_initial = omega(model.theta);
  trace.initial_consistency = gradients * model.theta;
  trace.initial_performance = reference_performance(model, work);
  const double cap = (1.0 + options.zeta) * trace.omega_initial;
  std::vector<double> best_card;
  if (validating) best_card = validation_card(model);

  trace.termination = Termination::iteration_cap;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const VectorXd& theta = result.model.theta;
    const AscentDirection dir = find_ascent_direction(gradients, tau, theta, cons);
    if (dir.prefix == 0) {
      trace.termination = Termination::zero_direction;
      break;
    }
    const StepLength step = line_search(theta, dir.d, cons, options.lambda_max);
    TraceRecord rec;
    rec.iteration = it;
    rec.prefix = dir.prefix;
    rec.selected.assign(tau.order.begin(), tau.order.begin() + static_cast<std::ptrdiff_t>(dir.prefix));
    rec.d = dir.d;
    rec.lambda = step.lambda;
    rec.lambda_capped = step.capped;
    rec.omega_before = omega(theta);
    if (step.lambda <= 0.0) {
      rec.omega_after = rec.omega_before;
      rec.consistency = gradients * theta;
      rec.performance = reference_performance(result.model, work);
      trace.records.push_back(std::move(rec));
      trace.termination = Termination::zero_step;
      break;
    }
    FittedModel next = result.model;
    next.theta = theta + step.lambda * dir.d;
    rec.omega_after = omega(next.theta);
    rec.consistency = gradients * next.theta;
    rec.performance = reference_performance(next, work);
    if (rec.omega_after > cap) {
      trace.records.push_back(std::move(rec));
      trace.termination = Termination::complexity_cap;
      break;
    }
    if (validating) {
      const auto card = validation_card(next);
      const std::size_t t1 = tau.order[0] - 1;
      const std::size_t t2 = tau.order.size() > 1 ? tau.order[1] - 1 : t1;
      if (!(card[t1] < best_card[t1] || card[t2] < best_card[t2])) {
        trace.records.push_back(std::move(rec));
        trace.termination = Termination::validation_stop;
        break;
      }
      best_card = card;
    }
    rec.accepted = true;
    trace.records.push_back(std::move(rec));
    result.model = std::move(next);
  }
  return result;
}

}  // namespace mcsort
