#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcsort/model.hpp"

namespace mcsort {

/// Credibility distribution over q preference-ordered classes. Index 0 is
/// the worst class Cl_1.
class ValuedAssignment {
 public:
  ValuedAssignment() = default;

  /// Validates nonnegativity and unit sum. A sum within 1e-9 of 1 is
  /// renormalized; anything further off is rejected.
  static ValuedAssignment from_vector(std::vector<double> sigma);
  /// Crisp assignment to class `cls` (1-based).
  static ValuedAssignment one_hot(std::size_t q, std::size_t cls);

  const std::vector<double>& sigma() const { return sigma_; }
  double operator[](std::size_t s) const { return sigma_[s]; }
  std::size_t num_classes() const { return sigma_.size(); }
  /// 1-based class with the largest credibility (lowest index on ties).
  std::size_t top_class() const;

  friend bool operator==(const ValuedAssignment&, const ValuedAssignment&) = default;

 private:
  explicit ValuedAssignment(std::vector<double> sigma) : sigma_(std::move(sigma)) {}
  std::vector<double> sigma_;
};

/// Alternatives, their performances on internal (gain) scales, and the
/// assignment examples. `assignments[i]` is empty when alternative i has no
/// known class.
struct SortingProblem {
  std::vector<CriterionScale> criteria;
  std::vector<std::string> ids;
  Eigen::MatrixXd performances;  // one row per alternative
  std::size_t num_classes = 0;
  std::vector<std::optional<ValuedAssignment>> assignments;
  std::vector<std::size_t> reference;  // A^R, sorted
  std::vector<std::size_t> test;       // A^T, sorted

  std::size_t num_alternatives() const { return static_cast<std::size_t>(performances.rows()); }
  std::size_t num_criteria() const { return criteria.size(); }
  std::vector<double> row(std::size_t i) const;
  const ValuedAssignment& sigma(std::size_t i) const;

  /// Checks shapes, scale membership, σ dimensions and that the reference
  /// set only holds labelled alternatives.
  void validate() const;

  /// Copy restricted to the given reference/test indices.
  SortingProblem with_split(std::vector<std::size_t> reference, std::vector<std::size_t> test) const;

  friend bool operator==(const SortingProblem& a, const SortingProblem& b);
};

}  // namespace mcsort
