#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mcsort/model.hpp"
#include "mcsort/problem.hpp"

namespace mcsort {

struct ClassPerformance {
  std::vector<double> card_pf;
  std::vector<double> ord_pf;
};

ClassPerformance class_performance(const std::vector<ValuedAssignment>& actual,
                                   const std::vector<ValuedAssignment>& predicted);

/// Predicted valued assignment of each reference alternative, using the
/// whole reference set (the alternative itself contributes nothing).
std::vector<ValuedAssignment> predict_reference(const FittedModel& model, const SortingProblem& problem);

/// Class performance of the model on the reference set.
ClassPerformance reference_performance(const FittedModel& model, const SortingProblem& problem);

/// O_s for every class and their gradients (row s-1 is the gradient of O_s).
/// O is linear in theta, so the gradient does not depend on it.
struct ConsistencyScores {
  Eigen::VectorXd values;
  Eigen::MatrixXd gradients;
};

ConsistencyScores class_consistency_scores(const FittedModel& model, const SortingProblem& problem);

/// Classes (1-based) in priority order, highest first.
struct PriorityRanking {
  std::vector<std::size_t> order;

  static PriorityRanking from_order(std::vector<std::size_t> order, std::size_t q);
};

struct AscentDirection {
  Eigen::VectorXd d;           // zero when no prefix admits strict ascent
  std::size_t prefix = 0;      // number of leading priority classes improved
  double min_slope = 0.0;      // min over selected classes of grad^T d
};

/// Largest priority prefix whose consistency scores can all increase along
/// one feasible direction d with |d_j| <= 1.
AscentDirection find_ascent_direction(const Eigen::MatrixXd& gradients, const PriorityRanking& tau,
                                      const Eigen::VectorXd& theta, const LinearConstraintSet& constraints);

struct StepLength {
  double lambda = 0.0;
  bool capped = false;  // no blocking constraint; lambda_max used
};

/// Largest lambda >= 0 keeping theta + lambda d feasible.
StepLength line_search(const Eigen::VectorXd& theta, const Eigen::VectorXd& d, const LinearConstraintSet& constraints,
                       double lambda_max = 1e3);

enum class Termination { zero_direction, zero_step, complexity_cap, iteration_cap, validation_stop };

std::string_view to_string(Termination t);

struct TraceRecord {
  int iteration = 0;
  std::size_t prefix = 0;
  std::vector<std::size_t> selected;  // 1-based classes
  Eigen::VectorXd d;
  double lambda = 0.0;
  bool lambda_capped = false;
  double omega_before = 0.0;
  double omega_after = 0.0;
  bool accepted = false;
  Eigen::VectorXd consistency;  // O_s after the step
  ClassPerformance performance;  // reference set, after the step
};

struct AdjustmentTrace {
  double omega_initial = 0.0;
  ClassPerformance initial_performance;
  Eigen::VectorXd initial_consistency;
  std::vector<TraceRecord> records;
  Termination termination = Termination::zero_direction;

  /// One JSON object per line: a header line, then one per iteration.
  void write_jsonl(std::ostream& out) const;
};

struct AdjustOptions {
  double zeta = 0.2;
  int max_iterations = 100;
  double lambda_max = 1e3;
  /// Reference alternatives (indices into the problem) held out to decide
  /// when to stop: the loop ends once CardPf of the two highest-priority
  /// classes on this subset stops improving.
  std::vector<std::size_t> validation;
};

struct AdjustResult {
  FittedModel model;
  AdjustmentTrace trace;
};

AdjustResult adjust(const FittedModel& model, const SortingProblem& problem, const PriorityRanking& tau,
                    const AdjustOptions& options);

}  // namespace mcsort
