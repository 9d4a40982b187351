#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcsort/learner.hpp"
#include "mcsort/metrics.hpp"
#include "mcsort/model.hpp"
#include "mcsort/priority.hpp"
#include "mcsort/problem.hpp"

namespace mcsort {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

/// Raw performance table: ids and values as written in the file.
struct PerformanceTable {
  std::vector<std::string> criteria;  // header names after `id`
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
};

PerformanceTable read_performances(std::istream& in, const std::string& source = "performances");
void write_performances(std::ostream& out, const PerformanceTable& table);

/// `id,class` (1-based) or `id,sigma_1,...,sigma_q`. `q` is required for
/// the crisp form and checked against the valued form.
std::vector<std::pair<std::string, ValuedAssignment>> read_assignments(std::istream& in, std::size_t q,
                                                                       const std::string& source = "assignments");
/// Crisp rows are written as `id,class` when `crisp_form` is set and every
/// vector is one-hot.
void write_assignments(std::ostream& out, const std::vector<std::string>& ids,
                       const std::vector<ValuedAssignment>& sigmas, bool crisp_form = false);

/// {"classes": q, "criteria": [{"name", "direction", "alpha", "beta"}]}.
/// alpha/beta are the worst/best raw values and default to the observed
/// range.
struct CriteriaConfig {
  std::size_t classes = 0;
  struct Entry {
    std::string name;
    Direction direction = Direction::gain;
    std::optional<double> alpha;
    std::optional<double> beta;
  };
  std::vector<Entry> criteria;
};

CriteriaConfig read_criteria_config(std::istream& in);
void write_criteria_config(std::ostream& out, const CriteriaConfig& config);

/// Builds an internal (gain-scale) problem. Alternatives listed in
/// `reference` form A^R; every other alternative is in A^T and takes its
/// credibility vector from `test` when present.
SortingProblem make_problem(const PerformanceTable& table, const CriteriaConfig& config,
                            const std::vector<std::pair<std::string, ValuedAssignment>>& reference,
                            const std::vector<std::pair<std::string, ValuedAssignment>>& test = {});

SortingProblem load_problem(const std::filesystem::path& performances, const std::filesystem::path& assignments,
                            const std::filesystem::path& criteria,
                            const std::optional<std::filesystem::path>& test_assignments = std::nullopt);

/// Raw performances to internal scale (cost criteria negated).
Eigen::MatrixXd to_internal(const PerformanceTable& table, const std::vector<CriterionScale>& scales);

/// Fitted model plus the reference set it was learned from, enough to
/// assign and adjust without the original files.
struct ModelBundle {
  FittedModel model;
  std::size_t num_classes = 0;
  std::vector<std::string> reference_ids;
  Eigen::MatrixXd reference_performances;  // internal scale
  std::vector<ValuedAssignment> reference_sigmas;

  /// Problem holding only the reference alternatives.
  SortingProblem reference_problem() const;
  static ModelBundle from_fit(const FittedModel& model, const SortingProblem& problem);
};

void write_model(std::ostream& out, const ModelBundle& bundle);
ModelBundle read_model(std::istream& in);

void write_fit_report(std::ostream& out, const FitReport& report);
void write_metrics(std::ostream& out, const MetricsReport& report, const std::optional<ClassPerformance>& perf);
void write_cv_table(std::ostream& out, const std::vector<CvRow>& table);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace mcsort
