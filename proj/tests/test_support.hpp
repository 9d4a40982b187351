#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mcsort/credibility.hpp"
#include "mcsort/model.hpp"
#include "mcsort/problem.hpp"
#include "mcsort/qp.hpp"
#include "mcsort/synthgen.hpp"

namespace testsupport {

using mcsort::ModelKind;

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Random credibility vector; about a third of the draws are one-hot and
/// the rest spread over a random window of adjacent classes.
inline mcsort::ValuedAssignment random_sigma(std::size_t q, std::mt19937_64& rng) {
  std::vector<double> s(q, 0.0);
  if (uniform(rng) < 0.33) {
    s[pick(rng, q)] = 1.0;
  } else {
    const std::size_t lo = pick(rng, q);
    const std::size_t hi = lo + pick(rng, q - lo);
    double sum = 0.0;
    for (std::size_t r = lo; r <= hi; ++r) sum += (s[r] = uniform(rng, 0.05, 1.0));
    for (double& v : s) v /= sum;
  }
  return mcsort::ValuedAssignment::from_vector(std::move(s));
}

/// Sorting problem on unit scales with performances on a level grid and
/// every alternative in the reference set.
inline mcsort::SortingProblem random_problem(std::size_t m, std::size_t n, std::size_t q, std::mt19937_64& rng,
                                             std::size_t levels = 6) {
  mcsort::SortingProblem p;
  p.criteria = mcsort::unit_scales(n);
  p.num_classes = q;
  p.performances.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  const auto grid = mcsort::unit_levels(levels);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) p.performances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = grid[pick(rng, levels)];
    p.ids.push_back("a" + std::to_string(i + 1));
    p.assignments.emplace_back(random_sigma(q, rng));
    p.reference.push_back(i);
  }
  return p;
}

/// Spec of each kind over unit scales (GENERAL on the given level grid).
inline mcsort::ModelSpec unit_spec(ModelKind kind, std::size_t n, int segments, std::size_t levels = 6) {
  const auto scales = mcsort::unit_scales(n);
  switch (kind) {
    case ModelKind::linear: return mcsort::ModelSpec::linear(scales);
    case ModelKind::piecewise_linear: return mcsort::ModelSpec::piecewise_linear(scales, std::vector<int>(n, segments));
    case ModelKind::spline: return mcsort::ModelSpec::spline(scales, std::vector<int>(n, segments));
    case ModelKind::general:
      return mcsort::ModelSpec::general_from_levels(scales, std::vector<std::vector<double>>(n, mcsort::unit_levels(levels)));
  }
  return mcsort::ModelSpec::linear(scales);
}

/// Random point of the base constraint set: Euclidean projection of a
/// random vector, computed with the QP solver.
inline Eigen::VectorXd random_feasible_theta(const mcsort::ModelSpec& spec, std::mt19937_64& rng) {
  const auto dim = static_cast<Eigen::Index>(spec.dimension());
  Eigen::VectorXd target(dim);
  for (Eigen::Index i = 0; i < dim; ++i) target(i) = uniform(rng, -0.5, 1.0);
  const mcsort::QpSolution sol = mcsort::solve_qp(
      {2.0 * Eigen::MatrixXd::Identity(dim, dim), -2.0 * target, mcsort::build_base_constraints(spec)});
  return sol.x;
}

inline constexpr ModelKind kAllKinds[] = {ModelKind::linear, ModelKind::piecewise_linear, ModelKind::spline,
                                          ModelKind::general};

}  // namespace testsupport
