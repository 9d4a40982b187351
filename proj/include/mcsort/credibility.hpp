#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mcsort/model.hpp"
#include "mcsort/problem.hpp"

namespace mcsort {

/// Credibility that a_i's class is better than, equal to, or worse than a_j's.
struct CredibilityTriple {
  double succ = 0.0;
  double eq = 0.0;
  double prec = 0.0;
};

CredibilityTriple credibility_triple(const ValuedAssignment& sigma_i, const ValuedAssignment& sigma_j);

/// Pairwise loss for value difference `diff` = U(a_i) - U(a_j).
double pair_objective_xi(const CredibilityTriple& triple, double diff);

/// Linear and L1-coupled parts of the learning objective over the reference
/// set: F(theta) = c^T theta + ||Y^T theta||_1 + theta^T H theta.
struct LearningData {
  Eigen::VectorXd c;
  Eigen::MatrixXd y;  // one column per pair with nonzero D_=
  std::vector<std::pair<std::size_t, std::size_t>> y_pairs;  // positions in the reference list
  Eigen::MatrixXd features;  // V(a) of each reference alternative, as columns
};

LearningData assemble_learning_data(const SortingProblem& problem, const ModelSpec& spec);

/// Crisp classes (1-based) to valued examples: the actual class keeps
/// 1 - spread, the rest goes to the adjacent classes.
std::vector<ValuedAssignment> make_valued_examples(const std::vector<std::size_t>& classes, double spread,
                                                   std::size_t q);

}  // namespace mcsort
