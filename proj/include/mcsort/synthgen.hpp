#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "mcsort/model.hpp"
#include "mcsort/problem.hpp"

namespace mcsort {

enum class TruthKind { linear, general };

struct GeneratorConfig {
  std::size_t alternatives = 500;
  std::size_t criteria = 6;
  std::size_t classes = 5;
  /// Distinct performance levels per criterion, equally spaced on [0, 1].
  std::size_t levels = 30;
  /// Growth-rate perturbation bound of the general generator, in [0, 1].
  double rho = 0.25;
  TruthKind truth = TruthKind::general;
  /// Linear ground-truth weights; empty means equal weights.
  std::vector<double> weights;
  /// Credibility moved to adjacent classes; 0 gives crisp examples.
  double spread = 0.0;
  double train_fraction = 0.7;
  /// Class sizes (lowest class first); empty means equal blocks.
  std::vector<std::size_t> occupancy;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticDataset {
  SortingProblem problem;  // every alternative carries its true assignment
  FittedModel truth;
  std::vector<double> values;         // U of every alternative under the truth
  std::vector<std::size_t> classes;   // 1-based crisp classes
};

std::vector<CriterionScale> unit_scales(std::size_t n);
std::vector<double> unit_levels(std::size_t count);

/// Random monotone GENERAL marginals over `levels` characteristic points:
/// u(x^0) = 0, u(x^1) random positive, each later increment is the previous
/// one times (1 + delta) with delta uniform on [-rho, rho]; then all
/// marginals are scaled so the trade-off weights sum to 1.
FittedModel random_monotone_value_function(const GeneratorConfig& config, std::mt19937_64& rng);

FittedModel linear_value_function(const std::vector<double>& weights);

/// 1-based classes from contiguous blocks of the value order; class 1 holds
/// the lowest values, equal values keep input order.
std::vector<std::size_t> assign_by_quantiles(const std::vector<double>& values, std::size_t q,
                                             const std::vector<std::size_t>& occupancy = {});

/// Per-class shuffle, first round(fraction * size) of each class to the
/// reference set. Returns (reference, test), both sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<std::size_t>& classes, double fraction, std::mt19937_64& rng);

SyntheticDataset make_dataset(const GeneratorConfig& config);

}  // namespace mcsort
