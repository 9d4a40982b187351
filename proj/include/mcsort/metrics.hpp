#pragma once

#include <cstddef>
#include <vector>

#include "mcsort/problem.hpp"

namespace mcsort {

/// Class indices (0-based) ordered by descending credibility, ties broken
/// by ascending class index.
std::vector<std::size_t> ranking_list(const ValuedAssignment& sigma);

double accuracy_at_n(const ValuedAssignment& actual, const ValuedAssignment& predicted, std::size_t n);

/// Pairs of classes whose credibilities are tied in either vector count as
/// neither concordant nor discordant.
double kendalls_tau(const ValuedAssignment& actual, const ValuedAssignment& predicted);

struct MetricsReport {
  std::size_t count = 0;
  /// mean_accuracy[N-1] = mean Accuracy@N.
  std::vector<double> mean_accuracy;
  double mean_kendall = 0.0;
  /// per_alternative_accuracy[i][N-1]
  std::vector<std::vector<double>> per_alternative_accuracy;
  std::vector<double> per_alternative_kendall;
};

MetricsReport evaluate_predictions(const std::vector<ValuedAssignment>& actual,
                                   const std::vector<ValuedAssignment>& predicted);

}  // namespace mcsort
