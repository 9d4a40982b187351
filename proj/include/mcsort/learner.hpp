#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mcsort/credibility.hpp"
#include "mcsort/model.hpp"
#include "mcsort/problem.hpp"

namespace mcsort {

struct Hyperparams {
  Multipliers multipliers;
  /// Sub-intervals per criterion for PIECEWISE_LINEAR/SPLINE. One entry is
  /// broadcast to every criterion; empty means 3.
  std::vector<int> segments;
  double rho = 1.0;
  double eps_abs = 1e-6;
  double eps_rel = 1e-5;
  int max_iterations = 5000;
  /// Upper bound for spline refinement.
  int max_segments = 16;

  void validate() const;
};

enum class FitStatus { converged, iteration_cap };

std::string_view to_string(FitStatus status);

/// Scaled-form ADMM iterate for the L1-coupled objective.
struct AdmmState {
  Eigen::VectorXd theta;
  Eigen::VectorXd z;
  Eigen::VectorXd u;
  double rho = 1.0;
  int iteration = 0;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
};

struct CvRow {
  Multipliers multipliers;
  int segments = 0;  // 0 when the kind has no sub-interval count
  double accuracy = 0.0;
  double kendall = 0.0;
};

struct FitReport {
  FittedModel model;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<double> primal_history;
  std::vector<double> dual_history;
  FitStatus status = FitStatus::converged;
  /// Spline refinement rounds performed (0 when the first fit was monotone).
  int refinements = 0;
  /// False if spline monotonicity still fails at the segment cap.
  bool monotone = true;
  std::vector<CvRow> cv_table;
};

/// Spec of the given kind over the problem's criteria. GENERAL takes its
/// characteristic points from every alternative in the problem.
ModelSpec make_model_spec(const SortingProblem& problem, ModelKind kind, const std::vector<int>& segments);

/// Soft-thresholding operator S_kappa applied entrywise.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double kappa);
double soft_threshold(double v, double kappa);

/// F(theta) = c^T theta + ||Y^T theta||_1 + Omega(theta).
double learning_objective(const LearningData& data, const ComplexityForm& omega, const Eigen::VectorXd& theta);

/// F(theta) from the pairwise definition without the c/Y shortcut.
double objective_from_scratch(const SortingProblem& problem, const FittedModel& model);

FitReport admm_fit(const SortingProblem& problem, const ModelSpec& spec, const Hyperparams& hyper);

/// Single QP with one auxiliary variable per pair; at most 60 reference
/// alternatives.
FitReport direct_fit(const SortingProblem& problem, const ModelSpec& spec, const Hyperparams& hyper);

/// admm_fit plus spline refinement: criteria whose fitted spline decreases
/// somewhere get their sub-interval count doubled and the model is refit.
FitReport fit_model(const SortingProblem& problem, ModelKind kind, const Hyperparams& hyper);

struct CvGrid {
  std::vector<double> c1;
  std::vector<double> c2;        // ignored for LINEAR
  std::vector<int> segments;     // PIECEWISE_LINEAR/SPLINE only; empty keeps hyper.segments

  static CvGrid desk();   // {1e-4, ..., 1e2}
  static CvGrid full();   // {1e-8, 5e-8, ..., 1e8, 5e8}, segments 1..10
};

struct CvResult {
  Hyperparams best;
  std::vector<CvRow> table;  // grid order
};

/// Stratified k-fold search. Folds are stratified on the top class of each
/// reference alternative and shuffled with `seed`.
CvResult cross_validate(const SortingProblem& problem, ModelKind kind, const CvGrid& grid, const Hyperparams& base,
                        std::size_t folds, std::uint64_t seed);

/// Reference positions of each fold.
std::vector<std::vector<std::size_t>> stratified_folds(const SortingProblem& problem, std::size_t folds,
                                                       std::uint64_t seed);

}  // namespace mcsort
