#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mcsort {

enum class Direction { gain, cost };

/// Performance scale of one criterion. Internally every criterion is
/// gain-type; cost criteria are negated at ingestion and keep
/// `direction == cost` only so that raw inputs can be converted again.
struct CriterionScale {
  std::size_t index = 0;
  std::string name;
  double alpha = 0.0;  // worst
  double beta = 1.0;   // best
  Direction direction = Direction::gain;

  friend bool operator==(const CriterionScale&, const CriterionScale&) = default;
};

enum class ModelKind { linear, piecewise_linear, spline, general };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Complexity multipliers. LINEAR uses `c1` as its single constant C.
struct Multipliers {
  double c1 = 1.0;
  double c2 = 1.0;
};

/// How GENERAL models treat performances that are not characteristic points.
enum class LevelLookup {
  exact,        // unknown level is an error
  interpolate,  // linear interpolation between neighbouring levels
};

/// Value-model family plus its per-criterion breakpoint layout. Determines
/// the layout of the flat parameter vector theta.
class ModelSpec {
 public:
  ModelSpec() = default;

  static ModelSpec linear(std::vector<CriterionScale> scales);
  static ModelSpec piecewise_linear(std::vector<CriterionScale> scales, std::vector<int> segments);
  static ModelSpec spline(std::vector<CriterionScale> scales, std::vector<int> segments);
  /// Characteristic points are the distinct values in each column of
  /// `performances` (plus the scale endpoints).
  static ModelSpec general(std::vector<CriterionScale> scales, const Eigen::MatrixXd& performances);
  static ModelSpec general_from_levels(std::vector<CriterionScale> scales,
                                       std::vector<std::vector<double>> levels);

  ModelKind kind() const { return kind_; }
  std::size_t num_criteria() const { return scales_.size(); }
  const std::vector<CriterionScale>& scales() const { return scales_; }
  const CriterionScale& scale(std::size_t j) const { return scales_.at(j); }

  /// Breakpoints x_j^0..x_j^K. LINEAR: {alpha, beta}.
  const std::vector<double>& grid(std::size_t j) const { return grids_.at(j); }
  /// Number of sub-intervals (gamma_j, or m_j for GENERAL).
  int segments(std::size_t j) const { return static_cast<int>(grids_.at(j).size()) - 1; }

  std::size_t block_offset(std::size_t j) const { return offsets_.at(j); }
  std::size_t block_size(std::size_t j) const { return offsets_.at(j + 1) - offsets_.at(j); }
  std::size_t dimension() const { return offsets_.empty() ? 0 : offsets_.back(); }

  /// Index of the sub-interval [x^k, x^{k+1}] holding `x`; a value equal to
  /// an interior breakpoint belongs to the left sub-interval.
  int segment_of(std::size_t j, double x) const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

 private:
  ModelSpec(ModelKind kind, std::vector<CriterionScale> scales, std::vector<std::vector<double>> grids);

  ModelKind kind_ = ModelKind::linear;
  std::vector<CriterionScale> scales_;
  std::vector<std::vector<double>> grids_;
  std::vector<std::size_t> offsets_;
};

/// A_eq theta = b_eq, A_in theta <= b_in.
struct LinearConstraintSet {
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd in_matrix;
  Eigen::VectorXd in_rhs;

  std::size_t dimension() const { return static_cast<std::size_t>(std::max(eq_matrix.cols(), in_matrix.cols())); }
  /// Largest violation over all rows (0 when feasible).
  double max_violation(const Eigen::VectorXd& theta) const;
};

/// Omega(theta) = theta^T H theta.
struct ComplexityForm {
  Eigen::MatrixXd hessian;
  Multipliers multipliers;

  double operator()(const Eigen::VectorXd& theta) const { return theta.dot(hessian * theta); }
};

/// theta plus the spec needed to evaluate it.
struct FittedModel {
  ModelSpec spec;
  Multipliers multipliers;
  Eigen::VectorXd theta;

  double value(std::span<const double> row, LevelLookup lookup = LevelLookup::interpolate) const;
};

struct MarginalCurve {
  std::vector<double> x;
  std::vector<double> u;
};

Eigen::VectorXd build_feature_map(const ModelSpec& spec, std::span<const double> row,
                                  LevelLookup lookup = LevelLookup::exact);

/// Columns are feature vectors of the selected rows of `performances`.
Eigen::MatrixXd build_feature_matrix(const ModelSpec& spec, const Eigen::MatrixXd& performances,
                                     std::span<const std::size_t> rows,
                                     LevelLookup lookup = LevelLookup::exact);

LinearConstraintSet build_base_constraints(const ModelSpec& spec);

ComplexityForm build_complexity_form(const ModelSpec& spec, const Multipliers& multipliers);

/// The unweighted shape term of Omega (slope variation, curvature, growth
/// rate variation); zero for LINEAR.
double shape_penalty(const ModelSpec& spec, const Eigen::VectorXd& theta);

double evaluate_value(const FittedModel& model, std::span<const double> row,
                      LevelLookup lookup = LevelLookup::interpolate);

/// u_j(x) for a single criterion.
double marginal_value(const ModelSpec& spec, const Eigen::VectorXd& theta, std::size_t j, double x);

/// u_j(beta_j) for every criterion.
std::vector<double> trade_off_weights(const ModelSpec& spec, const Eigen::VectorXd& theta);

std::vector<MarginalCurve> render_marginals(const FittedModel& model, int samples_per_interval);

/// Feasible starting point: every marginal linear with weight 1/n.
Eigen::VectorXd uniform_theta(const ModelSpec& spec);

/// Criteria whose spline marginal has du/dx < -tolerance somewhere on a grid
/// of `samples` points per sub-interval.
std::vector<std::size_t> spline_monotonicity_violations(const ModelSpec& spec, const Eigen::VectorXd& theta,
                                                        int samples = 64, double tolerance = 1e-8);

}  // namespace mcsort
