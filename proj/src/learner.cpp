#include "mcsort/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mcsort/assigner.hpp"
#include "mcsort/error.hpp"
#include "mcsort/metrics.hpp"
#include "mcsort/qp.hpp"

namespace mcsort {

namespace {

constexpr int kDefaultSegments = 3;
constexpr std::size_t kDirectFitLimit = 60;

std::vector<int> expand_segments(const std::vector<int>& segments, std::size_t n) {
  if (segments.empty()) return std::vector<int>(n, kDefaultSegments);
  if (segments.size() == 1) return std::vector<int>(n, segments.front());
  if (segments.size() != n) throw ParameterError("one sub-interval count per criterion is required");
  return segments;
}

Eigen::VectorXd solve_or_throw(const QpSolver& solver, const Eigen::VectorXd& q) {
  QpSolution sol = solver.solve(q);
  if (sol.status == QpStatus::optimal) return sol.x;
  if (sol.status == QpStatus::max_iterations && sol.kkt_residual <= 1e-6) return sol.x;
  throw SolverError(std::string("learning subproblem ended with status ") + std::string(to_string(sol.status)) + " kkt " + std::to_string(sol.kkt_residual) + " it " + std::to_string(sol.iterations));
}

}  // namespace

void Hyperparams::validate() const {
  if (!(multipliers.c1 > 0.0) || !(multipliers.c2 > 0.0)) throw ParameterError("complexity multipliers must be positive");
  if (!(rho > 0.0)) throw ParameterError("ADMM penalty must be positive");
  if (!(eps_abs > 0.0) || !(eps_rel > 0.0)) throw ParameterError("ADMM tolerances must be positive");
  if (max_iterations < 1) throw ParameterError("ADMM iteration cap must be positive");
  for (int s : segments) {
    if (s < 1) throw ParameterError("sub-interval counts must be positive");
  }
}

std::string_view to_string(FitStatus status) {
  return status == FitStatus::converged ? "converged" : "iteration_cap";
}

ModelSpec make_model_spec(const SortingProblem& problem, ModelKind kind, const std::vector<int>& segments) {
  const std::size_t n = problem.num_criteria();
  switch (kind) {
    case ModelKind::linear: return ModelSpec::linear(problem.criteria);
    case ModelKind::piecewise_linear: return ModelSpec::piecewise_linear(problem.criteria, expand_segments(segments, n));
    case ModelKind::spline: return ModelSpec::spline(problem.criteria, expand_segments(segments, n));
    case ModelKind::general: return ModelSpec::general(problem.criteria, problem.performances);
  }
  throw ParameterError("unknown model kind");
}

double soft_threshold(double v, double kappa) {
  if (v > kappa) return v - kappa;
  if (v < -kappa) return v + kappa;
  return 0.0;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double kappa) {
  if (!(kappa > 0.0)) throw ParameterError("threshold must be positive");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = soft_threshold(v(i), kappa);
  return out;
}

double learning_objective(const LearningData& data, const ComplexityForm& omega, const Eigen::VectorXd& theta) {
  double l1 = data.y.cols() > 0 ? (data.y.transpose() * theta).lpNorm<1>() : 0.0;
  return data.c.dot(theta) + l1 + omega(theta);
}

double objective_from_scratch(const SortingProblem& problem, const FittedModel& model) {
  const auto& ref = problem.reference;
  std::vector<double> values;
  values.reserve(ref.size());
  for (std::size_t i : ref) {
    const auto row = problem.row(i);
    values.push_back(model.theta.dot(build_feature_map(model.spec, row, LevelLookup::exact)));
  }
  double total = 0.0;
  for (std::size_t a = 0; a < ref.size(); ++a) {
    for (std::size_t b = a + 1; b < ref.size(); ++b) {
      total += pair_objective_xi(credibility_triple(problem.sigma(ref[a]), problem.sigma(ref[b])), values[a] - values[b]);
    }
  }
  return total + build_complexity_form(model.spec, model.multipliers)(model.theta);
}

FitReport admm_fit(const SortingProblem& problem, const ModelSpec& spec, const Hyperparams& hyper) {
  hyper.validate();
  const LearningData data = assemble_learning_data(problem, spec);
  const ComplexityForm omega = build_complexity_form(spec, hyper.multipliers);
  const Eigen::MatrixXd& y = data.y;
  const double rho = hyper.rho;

  Eigen::MatrixXd p = 2.0 * omega.hessian;
  if (y.cols() > 0) p.noalias() += rho * y * y.transpose();
  const QpSolver solver(std::move(p), build_base_constraints(spec));

  AdmmState st;
  st.rho = rho;
  st.theta = uniform_theta(spec);
  st.z = Eigen::VectorXd::Zero(y.cols());
  st.u = Eigen::VectorXd::Zero(y.cols());

  FitReport report;
  report.status = FitStatus::iteration_cap;
  if (y.cols() == 0) {
    st.theta = solve_or_throw(solver, data.c);
    st.iteration = 1;
    report.status = FitStatus::converged;
  } else {
    const double sqrt_p = std::sqrt(static_cast<double>(y.cols()));
    const double sqrt_n = std::sqrt(static_cast<double>(spec.dimension()));
    for (int k = 1; k <= hyper.max_iterations; ++k) {
      st.iteration = k;
      st.theta = solve_or_throw(solver, data.c + rho * (y * (st.u - st.z)));
      const Eigen::VectorXd yt = y.transpose() * st.theta;
      const Eigen::VectorXd z_old = st.z;
      st.z = soft_threshold(yt + st.u, 1.0 / rho);
      st.u += yt - st.z;
      const double r = (yt - st.z).norm();
      const double s = rho * (y * (st.z - z_old)).norm();
      st.primal_residuals.push_back(r);
      st.dual_residuals.push_back(s);
      const double eps_pri = hyper.eps_abs * sqrt_p + hyper.eps_rel * std::max(yt.norm(), st.z.norm());
      const double eps_dual = hyper.eps_abs * sqrt_n + hyper.eps_rel * rho * (y * st.u).norm();
      if (r <= eps_pri && s <= eps_dual) {
        report.status = FitStatus::converged;
        break;
      }
    }
  }

  report.model = FittedModel{spec, hyper.multipliers, st.theta};
  report.objective = learning_objective(data, omega, st.theta);
  report.iterations = st.iteration;
  report.primal_residual = st.primal_residuals.empty() ? 0.0 : st.primal_residuals.back();
  report.dual_residual = st.dual_residuals.empty() ? 0.0 : st.dual_residuals.back();
  report.primal_history = std::move(st.primal_residuals);
  report.dual_history = std::move(st.dual_residuals);
  return report;
}

FitReport direct_fit(const SortingProblem& problem, const ModelSpec& spec, const Hyperparams& hyper) {
  hyper.validate();
  if (problem.reference.size() > kDirectFitLimit) {
    throw ParameterError("direct_fit handles at most 60 reference alternatives; use admm_fit");
  }
  const LearningData data = assemble_learning_data(problem, spec);
  const ComplexityForm omega = build_complexity_form(spec, hyper.multipliers);
  const LinearConstraintSet base = build_base_constraints(spec);
  const Eigen::Index n = static_cast<Eigen::Index>(spec.dimension());
  const Eigen::Index t = data.y.cols();

  // variables (theta, tau); tau_k >= |y_k^T theta|
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n + t, n + t);
  p.topLeftCorner(n, n) = 2.0 * omega.hessian;
  Eigen::VectorXd q(n + t);
  q << data.c, Eigen::VectorXd::Ones(t);

  LinearConstraintSet cons;
  cons.eq_matrix = Eigen::MatrixXd::Zero(base.eq_matrix.rows(), n + t);
  cons.eq_matrix.leftCols(n) = base.eq_matrix;
  cons.eq_rhs = base.eq_rhs;
  const Eigen::Index mb = base.in_matrix.rows();
  cons.in_matrix = Eigen::MatrixXd::Zero(mb + 2 * t, n + t);
  cons.in_rhs = Eigen::VectorXd::Zero(mb + 2 * t);
  cons.in_matrix.topLeftCorner(mb, n) = base.in_matrix;
  cons.in_rhs.head(mb) = base.in_rhs;
  for (Eigen::Index k = 0; k < t; ++k) {
    cons.in_matrix.block(mb + 2 * k, 0, 1, n) = data.y.col(k).transpose();
    cons.in_matrix(mb + 2 * k, n + k) = -1.0;
    cons.in_matrix.block(mb + 2 * k + 1, 0, 1, n) = -data.y.col(k).transpose();
    cons.in_matrix(mb + 2 * k + 1, n + k) = -1.0;
  }

  const QpSolver solver(std::move(p), std::move(cons));
  const Eigen::VectorXd x = solve_or_throw(solver, q);

  FitReport report;
  report.model = FittedModel{spec, hyper.multipliers, x.head(n)};
  report.objective = learning_objective(data, omega, report.model.theta);
  report.iterations = 1;
  return report;
}

FitReport fit_model(const SortingProblem& problem, ModelKind kind, const Hyperparams& hyper) {
  hyper.validate();
  std::vector<int> segments = expand_segments(hyper.segments, problem.num_criteria());
  int refinements = 0;
  for (;;) {
    const ModelSpec spec = make_model_spec(problem, kind, segments);
    FitReport report = admm_fit(problem, spec, hyper);
    report.refinements = refinements;
    if (kind != ModelKind::spline) return report;
    const auto bad = spline_monotonicity_violations(spec, report.model.theta);
    if (bad.empty()) return report;
    bool grew = false;
    for (std::size_t j : bad) {
      if (segments[j] < hyper.max_segments) {
        segments[j] = std::min(2 * segments[j], hyper.max_segments);
        grew = true;
      }
    }
    if (!grew) {
      report.monotone = false;
      return report;
    }
    ++refinements;
  }
}

CvGrid CvGrid::desk() {
  CvGrid g;
  for (int e = -4; e <= 2; ++e) g.c1.push_back(std::pow(10.0, e));
  g.c2 = g.c1;
  return g;
}

CvGrid CvGrid::full() {
  CvGrid g;
  for (int e = -8; e <= 8; ++e) {
    g.c1.push_back(std::pow(10.0, e));
    g.c1.push_back(5.0 * std::pow(10.0, e));
  }
  g.c2 = g.c1;
  for (int s = 1; s <= 10; ++s) g.segments.push_back(s);
  return g;
}

std::vector<std::vector<std::size_t>> stratified_folds(const SortingProblem& problem, std::size_t folds,
                                                       std::uint64_t seed) {
  if (folds < 2) throw ParameterError("cross-validation needs at least two folds");
  if (problem.reference.size() < folds) throw ParameterError("more folds than reference alternatives");
  std::vector<std::vector<std::size_t>> by_class(problem.num_classes);
  for (std::size_t pos = 0; pos < problem.reference.size(); ++pos) {
    by_class[problem.sigma(problem.reference[pos]).top_class() - 1].push_back(pos);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t next = 0;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t pos : members) out[next++ % folds].push_back(pos);
  }
  for (auto& f : out) {
    if (f.empty()) throw ParameterError("a cross-validation fold is empty");
    std::sort(f.begin(), f.end());
  }
  return out;
}

CvResult cross_validate(const SortingProblem& problem, ModelKind kind, const CvGrid& grid, const Hyperparams& base,
                        std::size_t folds, std::uint64_t seed) {
  if (grid.c1.empty()) throw ParameterError("empty hyperparameter grid");
  const bool uses_c2 = kind != ModelKind::linear;
  const bool uses_segments = kind == ModelKind::piecewise_linear || kind == ModelKind::spline;
  const std::vector<double> c2_values = uses_c2 && !grid.c2.empty() ? grid.c2 : std::vector<double>{base.multipliers.c2};
  std::vector<int> segment_values{0};
  if (uses_segments && !grid.segments.empty()) segment_values = grid.segments;

  const auto fold_positions = stratified_folds(problem, folds, seed);

  CvResult result;
  const CvRow* best = nullptr;
  for (int seg : segment_values) {
    for (double c1 : grid.c1) {
      for (double c2 : c2_values) {
        Hyperparams h = base;
        h.multipliers = {c1, c2};
        if (seg > 0) h.segments = {seg};
        double acc = 0.0, tau = 0.0;
        std::size_t count = 0;
        for (const auto& fold : fold_positions) {
          std::vector<std::size_t> train, valid;
          std::size_t f = 0;
          for (std::size_t pos = 0; pos < problem.reference.size(); ++pos) {
            if (f < fold.size() && fold[f] == pos) {
              valid.push_back(problem.reference[pos]);
              ++f;
            } else {
              train.push_back(problem.reference[pos]);
            }
          }
          const SortingProblem sub = problem.with_split(train, valid);
          const FitReport fit = fit_model(sub, kind, h);
          const auto results = assign_rows(fit.model, ReferenceSet::from_problem(fit.model, sub), sub, sub.test);
          for (std::size_t k = 0; k < results.size(); ++k) {
            acc += accuracy_at_n(sub.sigma(sub.test[k]), results[k].soft, 1);
            tau += kendalls_tau(sub.sigma(sub.test[k]), results[k].soft);
            ++count;
          }
        }
        result.table.push_back({h.multipliers, seg, acc / static_cast<double>(count), tau / static_cast<double>(count)});
      }
    }
  }
  // Best accuracy, then Kendall's tau, then the smaller multipliers and
  // sub-interval count.
  auto better = [](const CvRow& a, const CvRow& b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    if (a.kendall != b.kendall) return a.kendall > b.kendall;
    if (a.multipliers.c1 != b.multipliers.c1) return a.multipliers.c1 < b.multipliers.c1;
    if (a.multipliers.c2 != b.multipliers.c2) return a.multipliers.c2 < b.multipliers.c2;
    return a.segments < b.segments;
  };
  for (const auto& row : result.table) {
    if (best == nullptr || better(row, *best)) best = &row;
  }
  result.best = base;
  result.best.multipliers = best->multipliers;
  if (best->segments > 0) result.best.segments = {best->segments};
  return result;
}

}  // namespace mcsort
