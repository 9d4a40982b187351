#include "mcsort/assigner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcsort/error.hpp"

namespace mcsort {

namespace {

constexpr double kTieTolerance = 1e-9;

std::pair<std::size_t, std::size_t> support_range(const ValuedAssignment& sigma) {
  std::size_t lo = sigma.num_classes(), hi = 0;
  for (std::size_t s = 0; s < sigma.num_classes(); ++s) {
    if (sigma[s] > 0.0) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  return {lo, hi};
}

}  // namespace

ReferenceSet ReferenceSet::from_problem(const FittedModel& model, const SortingProblem& problem) {
  ReferenceSet ref;
  ref.num_classes = problem.num_classes;
  for (std::size_t i : problem.reference) {
    const auto row = problem.row(i);
    ref.values.push_back(model.value(row, LevelLookup::interpolate));
    ref.sigmas.push_back(problem.sigma(i));
  }
  return ref;
}

GammaProfile gamma_profile(const ReferenceSet& reference, double value) {
  if (reference.values.empty()) throw InsufficientDataError("the reference set is empty");
  const std::size_t q = reference.num_classes;
  GammaProfile p;
  p.value = value;
  p.gamma.assign(q, 0.0);
  for (std::size_t a = 0; a < reference.values.size(); ++a) {
    const double d = reference.values[a] - value;
    const auto& sigma = reference.sigmas[a];
    // below = sum_{s<r} sigma_s, above = sum_{s>r} sigma_s
    double below = 0.0;
    double above = 1.0 - sigma[0];
    for (std::size_t r = 0; r < q; ++r) {
      if (r > 0) {
        below += sigma[r - 1];
        above -= sigma[r];
      }
      p.gamma[r] += below * d + sigma[r] * std::abs(d) - above * d;
    }
  }
  return p;
}

ValuedAssignment assign_crisp(const GammaProfile& profile) {
  const double lo = *std::min_element(profile.gamma.begin(), profile.gamma.end());
  std::vector<double> sigma(profile.gamma.size(), 0.0);
  std::size_t ties = 0;
  for (std::size_t r = 0; r < sigma.size(); ++r) {
    if (profile.gamma[r] <= lo + kTieTolerance) {
      sigma[r] = 1.0;
      ++ties;
    }
  }
  for (double& s : sigma) s /= static_cast<double>(ties);
  return ValuedAssignment::from_vector(std::move(sigma));
}

ValuedAssignment assign_soft(const GammaProfile& profile) {
  const double lo = *std::min_element(profile.gamma.begin(), profile.gamma.end());
  std::vector<double> sigma(profile.gamma.size());
  double sum = 0.0;
  for (std::size_t r = 0; r < sigma.size(); ++r) {
    sigma[r] = std::exp(-(profile.gamma[r] - lo));
    sum += sigma[r];
  }
  for (double& s : sigma) s /= sum;
  return ValuedAssignment::from_vector(std::move(sigma));
}

AssignmentResult assign_alternative(const ReferenceSet& reference, double value) {
  GammaProfile g = gamma_profile(reference, value);
  return {assign_crisp(g), assign_soft(g), std::move(g)};
}

std::vector<AssignmentResult> assign_rows(const FittedModel& model, const ReferenceSet& reference,
                                          const SortingProblem& problem, const std::vector<std::size_t>& rows) {
  std::vector<AssignmentResult> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) {
    try {
      out.push_back(assign_alternative(reference, model.value(problem.row(i), LevelLookup::interpolate)));
    } catch (const ValidationError& e) {
      throw ValidationError("alternative " + problem.ids.at(i) + ": " + e.what());
    }
  }
  return out;
}

bool crisp_classes_monotone(const std::vector<AssignmentResult>& results) {
  std::vector<std::size_t> order(results.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return results[a].gamma.value < results[b].gamma.value; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    const auto& lower = results[order[k - 1]];
    const auto& upper = results[order[k]];
    if (upper.gamma.value - lower.gamma.value <= 1e-12) continue;
    const auto [lo_a, hi_a] = support_range(lower.crisp);
    const auto [lo_b, hi_b] = support_range(upper.crisp);
    if (lo_b < lo_a || hi_b < hi_a) return false;
  }
  return true;
}

std::vector<AssignmentResult> batch_assign(const FittedModel& model, const SortingProblem& problem) {
  const ReferenceSet reference = ReferenceSet::from_problem(model, problem);
  auto results = assign_rows(model, reference, problem, problem.test);
  if (!crisp_classes_monotone(results)) throw Error("crisp assignments are not monotone in the comprehensive value");
  return results;
}

}  // namespace mcsort
