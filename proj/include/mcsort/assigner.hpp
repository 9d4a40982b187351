#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mcsort/model.hpp"
#include "mcsort/problem.hpp"

namespace mcsort {

/// Values and credibility vectors of the reference alternatives.
struct ReferenceSet {
  std::vector<double> values;
  std::vector<ValuedAssignment> sigmas;
  std::size_t num_classes = 0;

  static ReferenceSet from_problem(const FittedModel& model, const SortingProblem& problem);
};

struct GammaProfile {
  std::vector<double> gamma;  // gamma[r] for class r+1
  double value = 0.0;         // U(b)
};

struct AssignmentResult {
  ValuedAssignment crisp;
  ValuedAssignment soft;
  GammaProfile gamma;
};

GammaProfile gamma_profile(const ReferenceSet& reference, double value);

/// One-hot at the minimizing class, or uniform over all classes within 1e-9
/// of the minimum.
ValuedAssignment assign_crisp(const GammaProfile& profile);

/// softmax(-gamma), shifted by the minimum for overflow safety.
ValuedAssignment assign_soft(const GammaProfile& profile);

AssignmentResult assign_alternative(const ReferenceSet& reference, double value);

/// Assigns every alternative in `problem.test`, in that order. Throws if the
/// crisp classes are not monotone in U.
std::vector<AssignmentResult> batch_assign(const FittedModel& model, const SortingProblem& problem);

/// Same, for explicit rows of `problem.performances`.
std::vector<AssignmentResult> assign_rows(const FittedModel& model, const ReferenceSet& reference,
                                          const SortingProblem& problem, const std::vector<std::size_t>& rows);

/// True when, ordered by value, the crisp supports never move down.
bool crisp_classes_monotone(const std::vector<AssignmentResult>& results);

}  // namespace mcsort
