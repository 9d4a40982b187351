#include "mcsort/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mcsort/credibility.hpp"
#include "mcsort/error.hpp"

namespace mcsort {

void GeneratorConfig::validate() const {
  if (alternatives < classes) throw ParameterError("fewer alternatives than classes");
  if (criteria < 1) throw ParameterError("at least one criterion is required");
  if (classes < 2) throw ParameterError("at least two classes are required");
  if (levels < 2) throw ParameterError("at least two performance levels are required");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in [0, 1]");
  if (!weights.empty() && weights.size() != criteria) throw ParameterError("one weight per criterion is required");
  if (!(spread >= 0.0 && spread < 1.0)) throw ParameterError("spread must lie in [0, 1)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParameterError("train fraction must lie in (0, 1)");
}

std::vector<CriterionScale> unit_scales(std::size_t n) {
  std::vector<CriterionScale> scales(n);
  for (std::size_t j = 0; j < n; ++j) {
    scales[j].index = j;
    scales[j].name = "g" + std::to_string(j + 1);
    scales[j].alpha = 0.0;
    scales[j].beta = 1.0;
  }
  return scales;
}

std::vector<double> unit_levels(std::size_t count) {
  std::vector<double> levels(count);
  for (std::size_t k = 0; k < count; ++k) levels[k] = static_cast<double>(k) / static_cast<double>(count - 1);
  return levels;
}

FittedModel random_monotone_value_function(const GeneratorConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> perturb(-config.rho, config.rho);
  const std::size_t n = config.criteria;
  const std::size_t levels = config.levels;
  std::vector<std::vector<double>> u(n, std::vector<double>(levels, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double step = 1.0 - unit(rng);  // (0, 1]
    u[j][1] = step;
    for (std::size_t k = 2; k < levels; ++k) {
      double factor = 1.0 + perturb(rng);
      while (factor <= 0.0) factor = 1.0 + perturb(rng);
      step *= factor;
      u[j][k] = u[j][k - 1] + step;
    }
  }
  double total = 0.0;
  for (const auto& uj : u) total += uj.back();
  const auto scales = unit_scales(n);
  ModelSpec spec = ModelSpec::general_from_levels(scales, std::vector<std::vector<double>>(n, unit_levels(levels)));
  Eigen::VectorXd theta(static_cast<Eigen::Index>(spec.dimension()));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < levels; ++k) theta(static_cast<Eigen::Index>(spec.block_offset(j) + k)) = u[j][k] / total;
  }
  return FittedModel{std::move(spec), Multipliers{}, std::move(theta)};
}

FittedModel linear_value_function(const std::vector<double>& weights) {
  if (weights.empty()) throw ParameterError("no weights given");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ParameterError("weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("weights must sum to 1");
  ModelSpec spec = ModelSpec::linear(unit_scales(weights.size()));
  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return FittedModel{std::move(spec), Multipliers{}, std::move(theta)};
}

std::vector<std::size_t> assign_by_quantiles(const std::vector<double>& values, std::size_t q,
                                             const std::vector<std::size_t>& occupancy) {
  if (values.empty()) throw ParameterError("no values to classify");
  if (q < 1) throw ParameterError("at least one class is required");
  std::vector<std::size_t> sizes = occupancy;
  if (sizes.empty()) {
    sizes.assign(q, values.size() / q);
    for (std::size_t s = 0; s < values.size() % q; ++s) ++sizes[s];
  }
  if (sizes.size() != q || std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) != values.size()) {
    throw ParameterError("class occupancy must have q entries summing to the number of alternatives");
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> classes(values.size());
  std::size_t pos = 0;
  for (std::size_t s = 0; s < q; ++s) {
    for (std::size_t k = 0; k < sizes[s]; ++k) classes[order[pos++]] = s + 1;
  }
  return classes;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<std::size_t>& classes, double fraction, std::mt19937_64& rng) {
  const std::size_t q = classes.empty() ? 0 : *std::max_element(classes.begin(), classes.end());
  std::vector<std::vector<std::size_t>> members(q);
  for (std::size_t i = 0; i < classes.size(); ++i) members[classes[i] - 1].push_back(i);
  std::vector<std::size_t> reference, test;
  for (auto& group : members) {
    std::shuffle(group.begin(), group.end(), rng);
    const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(group.size())));
    reference.insert(reference.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(take));
    test.insert(test.end(), group.begin() + static_cast<std::ptrdiff_t>(take), group.end());
  }
  std::sort(reference.begin(), reference.end());
  std::sort(test.begin(), test.end());
  return {std::move(reference), std::move(test)};
}

SyntheticDataset make_dataset(const GeneratorConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  SyntheticDataset ds;
  if (config.truth == TruthKind::linear) {
    std::vector<double> w = config.weights;
    if (w.empty()) w.assign(config.criteria, 1.0 / static_cast<double>(config.criteria));
    ds.truth = linear_value_function(w);
  } else {
    ds.truth = random_monotone_value_function(config, rng);
  }

  const auto levels = unit_levels(config.levels);
  std::uniform_int_distribution<std::size_t> pick(0, config.levels - 1);
  const auto m = static_cast<Eigen::Index>(config.alternatives);
  const auto n = static_cast<Eigen::Index>(config.criteria);
  SortingProblem& p = ds.problem;
  p.criteria = unit_scales(config.criteria);
  p.num_classes = config.classes;
  p.performances.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) p.performances(i, j) = levels[pick(rng)];
  }
  ds.values.resize(config.alternatives);
  for (std::size_t i = 0; i < config.alternatives; ++i) {
    ds.values[i] = ds.truth.value(p.row(i), LevelLookup::exact);
    p.ids.push_back("a" + std::to_string(i + 1));
  }
  ds.classes = assign_by_quantiles(ds.values, config.classes, config.occupancy);
  for (auto& sigma : make_valued_examples(ds.classes, config.spread, config.classes)) p.assignments.emplace_back(std::move(sigma));
  auto [reference, test] = stratified_split(ds.classes, config.train_fraction, rng);
  p.reference = std::move(reference);
  p.test = std::move(test);
  return ds;
}

}  // namespace mcsort
