#include "mcsort/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "mcsort/error.hpp"

namespace mcsort {

std::vector<std::size_t> ranking_list(const ValuedAssignment& sigma) {
  std::vector<std::size_t> order(sigma.num_classes());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });
  return order;
}

double accuracy_at_n(const ValuedAssignment& actual, const ValuedAssignment& predicted, std::size_t n) {
  const std::size_t q = actual.num_classes();
  if (predicted.num_classes() != q) throw DimensionError("credibility vectors have different lengths");
  if (n < 1 || n > q) throw ParameterError("N must lie in 1..q");
  const auto a = ranking_list(actual);
  const auto p = ranking_list(predicted);
  std::vector<bool> in_a(q, false);
  for (std::size_t k = 0; k < n; ++k) in_a[a[k]] = true;
  std::size_t common = 0;
  for (std::size_t k = 0; k < n; ++k) common += in_a[p[k]] ? 1 : 0;
  return static_cast<double>(common) / static_cast<double>(n);
}

double kendalls_tau(const ValuedAssignment& actual, const ValuedAssignment& predicted) {
  const std::size_t q = actual.num_classes();
  if (predicted.num_classes() != q) throw DimensionError("credibility vectors have different lengths");
  if (q < 2) return 1.0;
  long concordant = 0, discordant = 0;
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = r + 1; s < q; ++s) {
      const double da = actual[r] - actual[s];
      const double dp = predicted[r] - predicted[s];
      if (da == 0.0 || dp == 0.0) continue;
      if ((da > 0.0) == (dp > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  return 2.0 * static_cast<double>(concordant - discordant) / static_cast<double>(q * (q - 1));
}

MetricsReport evaluate_predictions(const std::vector<ValuedAssignment>& actual,
                                   const std::vector<ValuedAssignment>& predicted) {
  if (actual.size() != predicted.size()) throw DimensionError("actual and predicted lists differ in length");
  MetricsReport report;
  report.count = actual.size();
  if (actual.empty()) return report;
  const std::size_t q = actual.front().num_classes();
  report.mean_accuracy.assign(q, 0.0);
  for (std::size_t i = 0; i < actual.size(); ++i) {
    std::vector<double> acc(q);
    for (std::size_t n = 1; n <= q; ++n) {
      acc[n - 1] = accuracy_at_n(actual[i], predicted[i], n);
      report.mean_accuracy[n - 1] += acc[n - 1];
    }
    const double tau = kendalls_tau(actual[i], predicted[i]);
    report.mean_kendall += tau;
    report.per_alternative_accuracy.push_back(std::move(acc));
    report.per_alternative_kendall.push_back(tau);
  }
  const double m = static_cast<double>(actual.size());
  for (double& a : report.mean_accuracy) a /= m;
  report.mean_kendall /= m;
  return report;
}

}  // namespace mcsort
