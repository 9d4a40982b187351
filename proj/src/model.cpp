#include "mcsort/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcsort/error.hpp"

namespace mcsort {

namespace {

constexpr double kScaleTolerance = 1e-9;

double clamp_to_scale(const CriterionScale& s, double x) {
  const double tol = kScaleTolerance * (s.beta - s.alpha);
  if (!(x >= s.alpha - tol && x <= s.beta + tol)) {
    std::ostringstream msg;
    msg << "performance " << x << " on criterion " << (s.name.empty() ? std::to_string(s.index + 1) : s.name)
        << " is outside [" << s.alpha << ", " << s.beta << "]";
    throw RangeError(msg.str());
  }
  return std::clamp(x, s.alpha, s.beta);
}

void validate_scales(const std::vector<CriterionScale>& scales) {
  if (scales.empty()) throw ParameterError("a model needs at least one criterion");
  for (const auto& s : scales) {
    if (!(s.alpha < s.beta)) {
      throw ParameterError("criterion " + std::to_string(s.index + 1) + " has alpha >= beta");
    }
  }
}

std::vector<double> equal_breakpoints(const CriterionScale& s, int gamma) {
  if (gamma < 1) throw ParameterError("number of sub-intervals must be >= 1");
  std::vector<double> grid(static_cast<std::size_t>(gamma) + 1);
  for (int k = 0; k <= gamma; ++k) {
    grid[static_cast<std::size_t>(k)] = s.alpha + (static_cast<double>(k) / gamma) * (s.beta - s.alpha);
  }
  grid.back() = s.beta;
  return grid;
}

inline Eigen::Vector4d cubic_value_row(double x) { return {1.0, x, x * x, x * x * x}; }
inline Eigen::Vector4d cubic_slope_row(double x) { return {0.0, 1.0, 2.0 * x, 3.0 * x * x}; }
inline Eigen::Vector4d cubic_curvature_row(double x) { return {0.0, 0.0, 2.0, 6.0 * x}; }

// Features of one criterion, written into `out` (sized to the block).
void criterion_features(const ModelSpec& spec, std::size_t j, double raw, LevelLookup lookup,
                        Eigen::Ref<Eigen::VectorXd> out) {
  const CriterionScale& s = spec.scale(j);
  const double x = clamp_to_scale(s, raw);
  const auto& grid = spec.grid(j);
  out.setZero();
  switch (spec.kind()) {
    case ModelKind::linear:
      out(0) = (x - s.alpha) / (s.beta - s.alpha);
      break;
    case ModelKind::piecewise_linear: {
      const int k = spec.segment_of(j, x);
      for (int t = 0; t < k; ++t) out(t) = 1.0;
      out(k) = (x - grid[k]) / (grid[k + 1] - grid[k]);
      break;
    }
    case ModelKind::spline: {
      const int k = spec.segment_of(j, x);
      out.segment<4>(4 * k) = cubic_value_row(x);
      break;
    }
    case ModelKind::general: {
      const double tol = kScaleTolerance * (s.beta - s.alpha);
      auto it = std::lower_bound(grid.begin(), grid.end(), x - tol);
      if (it != grid.end() && std::abs(*it - x) <= tol) {
        out(it - grid.begin()) = 1.0;
        break;
      }
      if (lookup == LevelLookup::exact) {
        std::ostringstream msg;
        msg << "performance " << raw << " is not a characteristic point of criterion " << j + 1;
        throw UnknownLevelError(msg.str());
      }
      const int k = spec.segment_of(j, x);
      const double t = (x - grid[k]) / (grid[k + 1] - grid[k]);
      out(k) = 1.0 - t;
      out(k + 1) = t;
      break;
    }
  }
}

// Sum of weighted rank-one terms w * a a^T.
struct QuadraticBuilder {
  Eigen::MatrixXd h;
  explicit QuadraticBuilder(std::size_t dim) : h(Eigen::MatrixXd::Zero(dim, dim)) {}
  void add(const Eigen::VectorXd& a, double w) { h.noalias() += w * a * a.transpose(); }
};

Eigen::MatrixXd complexity_hessian(const ModelSpec& spec, double c1, double c2) {
  const std::size_t dim = spec.dimension();
  QuadraticBuilder q(dim);
  for (std::size_t j = 0; j < spec.num_criteria(); ++j) {
    const std::size_t off = spec.block_offset(j);
    const std::size_t len = spec.block_size(j);
    const CriterionScale& s = spec.scale(j);
    const auto& grid = spec.grid(j);
    const int gamma = spec.segments(j);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(dim);
    switch (spec.kind()) {
      case ModelKind::linear:
        a(off) = 1.0;
        q.add(a, c1);
        break;
      case ModelKind::piecewise_linear: {
        a.segment(off, len).setOnes();
        q.add(a, c1);
        const double scale = gamma / (s.beta - s.alpha);
        for (int t = 0; t + 1 < gamma; ++t) {
          a.setZero();
          a(off + t + 1) = scale;
          a(off + t) = -scale;
          q.add(a, c2);
        }
        break;
      }
      case ModelKind::spline: {
        a.segment<4>(off + 4 * (gamma - 1)) = cubic_value_row(s.beta);
        q.add(a, c1);
        // integral of (2 s2 + 6 s3 x)^2 over each piece, expanded exactly
        for (int k = 0; k < gamma; ++k) {
          const double lo = grid[k];
          const double hi = grid[k + 1];
          const std::size_t i2 = off + 4 * k + 2;
          const std::size_t i3 = i2 + 1;
          q.h(i2, i2) += c2 * 4.0 * (hi - lo);
          q.h(i2, i3) += c2 * 6.0 * (hi * hi - lo * lo);
          q.h(i3, i2) += c2 * 6.0 * (hi * hi - lo * lo);
          q.h(i3, i3) += c2 * 12.0 * (hi * hi * hi - lo * lo * lo);
        }
        break;
      }
      case ModelKind::general: {
        a(off + gamma) = 1.0;
        q.add(a, c1);
        for (int k = 1; k < gamma; ++k) {
          a.setZero();
          const double right = 1.0 / (grid[k + 1] - grid[k]);
          const double left = 1.0 / (grid[k] - grid[k - 1]);
          a(off + k + 1) += right;
          a(off + k) -= right + left;
          a(off + k - 1) += left;
          q.add(a, c2);
        }
        break;
      }
    }
  }
  return q.h;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear: return "linear";
    case ModelKind::piecewise_linear: return "piecewise_linear";
    case ModelKind::spline: return "spline";
    case ModelKind::general: return "general";
  }
  return "linear";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "linear") return ModelKind::linear;
  if (text == "piecewise_linear" || text == "piecewise-linear" || text == "pl") return ModelKind::piecewise_linear;
  if (text == "spline") return ModelKind::spline;
  if (text == "general") return ModelKind::general;
  throw ParameterError("unknown model kind '" + std::string(text) + "'");
}

ModelSpec::ModelSpec(ModelKind kind, std::vector<CriterionScale> scales, std::vector<std::vector<double>> grids)
    : kind_(kind), scales_(std::move(scales)), grids_(std::move(grids)) {
  validate_scales(scales_);
  if (grids_.size() != scales_.size()) throw DimensionError("one breakpoint grid per criterion required");
  offsets_.assign(scales_.size() + 1, 0);
  for (std::size_t j = 0; j < scales_.size(); ++j) {
    const auto& g = grids_[j];
    if (g.size() < 2) throw ParameterError("breakpoint grid needs at least two points");
    for (std::size_t k = 1; k < g.size(); ++k) {
      if (!(g[k - 1] < g[k])) throw ParameterError("breakpoints must be strictly increasing");
    }
    std::size_t block = 0;
    switch (kind_) {
      case ModelKind::linear: block = 1; break;
      case ModelKind::piecewise_linear: block = g.size() - 1; break;
      case ModelKind::spline: block = 4 * (g.size() - 1); break;
      case ModelKind::general: block = g.size(); break;
    }
    offsets_[j + 1] = offsets_[j] + block;
  }
}

ModelSpec ModelSpec::linear(std::vector<CriterionScale> scales) {
  validate_scales(scales);
  std::vector<std::vector<double>> grids;
  for (const auto& s : scales) grids.push_back({s.alpha, s.beta});
  return ModelSpec(ModelKind::linear, std::move(scales), std::move(grids));
}

ModelSpec ModelSpec::piecewise_linear(std::vector<CriterionScale> scales, std::vector<int> segments) {
  validate_scales(scales);
  if (segments.size() != scales.size()) throw DimensionError("one sub-interval count per criterion required");
  std::vector<std::vector<double>> grids;
  for (std::size_t j = 0; j < scales.size(); ++j) grids.push_back(equal_breakpoints(scales[j], segments[j]));
  return ModelSpec(ModelKind::piecewise_linear, std::move(scales), std::move(grids));
}

ModelSpec ModelSpec::spline(std::vector<CriterionScale> scales, std::vector<int> segments) {
  validate_scales(scales);
  if (segments.size() != scales.size()) throw DimensionError("one sub-interval count per criterion required");
  std::vector<std::vector<double>> grids;
  for (std::size_t j = 0; j < scales.size(); ++j) grids.push_back(equal_breakpoints(scales[j], segments[j]));
  return ModelSpec(ModelKind::spline, std::move(scales), std::move(grids));
}

ModelSpec ModelSpec::general(std::vector<CriterionScale> scales, const Eigen::MatrixXd& performances) {
  validate_scales(scales);
  if (static_cast<std::size_t>(performances.cols()) != scales.size()) {
    throw DimensionError("performance table width does not match the number of criteria");
  }
  std::vector<std::vector<double>> levels(scales.size());
  for (std::size_t j = 0; j < scales.size(); ++j) {
    auto& lv = levels[j];
    for (Eigen::Index i = 0; i < performances.rows(); ++i) lv.push_back(clamp_to_scale(scales[j], performances(i, j)));
  }
  return general_from_levels(std::move(scales), std::move(levels));
}

ModelSpec ModelSpec::general_from_levels(std::vector<CriterionScale> scales, std::vector<std::vector<double>> levels) {
  validate_scales(scales);
  if (levels.size() != scales.size()) throw DimensionError("one level list per criterion required");
  for (std::size_t j = 0; j < scales.size(); ++j) {
    auto& lv = levels[j];
    lv.push_back(scales[j].alpha);
    lv.push_back(scales[j].beta);
    std::sort(lv.begin(), lv.end());
    const double tol = kScaleTolerance * (scales[j].beta - scales[j].alpha);
    lv.erase(std::unique(lv.begin(), lv.end(), [tol](double a, double b) { return std::abs(a - b) <= tol; }),
             lv.end());
    lv.front() = scales[j].alpha;
    lv.back() = scales[j].beta;
  }
  return ModelSpec(ModelKind::general, std::move(scales), std::move(levels));
}

int ModelSpec::segment_of(std::size_t j, double x) const {
  const auto& g = grids_.at(j);
  auto it = std::lower_bound(g.begin() + 1, g.end(), x);
  const auto k = static_cast<int>(it - (g.begin() + 1));
  return std::clamp(k, 0, static_cast<int>(g.size()) - 2);
}

double LinearConstraintSet::max_violation(const Eigen::VectorXd& theta) const {
  double worst = 0.0;
  if (eq_matrix.rows() > 0) worst = std::max(worst, (eq_matrix * theta - eq_rhs).cwiseAbs().maxCoeff());
  if (in_matrix.rows() > 0) worst = std::max(worst, (in_matrix * theta - in_rhs).maxCoeff());
  return worst;
}

double FittedModel::value(std::span<const double> row, LevelLookup lookup) const {
  return evaluate_value(*this, row, lookup);
}

Eigen::VectorXd build_feature_map(const ModelSpec& spec, std::span<const double> row, LevelLookup lookup) {
  if (row.size() != spec.num_criteria()) throw DimensionError("performance row has the wrong number of criteria");
  Eigen::VectorXd v(spec.dimension());
  for (std::size_t j = 0; j < spec.num_criteria(); ++j) {
    criterion_features(spec, j, row[j], lookup,
                       v.segment(static_cast<Eigen::Index>(spec.block_offset(j)),
                                 static_cast<Eigen::Index>(spec.block_size(j))));
  }
  return v;
}

Eigen::MatrixXd build_feature_matrix(const ModelSpec& spec, const Eigen::MatrixXd& performances,
                                     std::span<const std::size_t> rows, LevelLookup lookup) {
  Eigen::MatrixXd out(spec.dimension(), rows.size());
  std::vector<double> buf(spec.num_criteria());
  for (std::size_t c = 0; c < rows.size(); ++c) {
    for (std::size_t j = 0; j < buf.size(); ++j) buf[j] = performances(static_cast<Eigen::Index>(rows[c]), j);
    out.col(static_cast<Eigen::Index>(c)) = build_feature_map(spec, buf, lookup);
  }
  return out;
}

LinearConstraintSet build_base_constraints(const ModelSpec& spec) {
  const auto dim = static_cast<Eigen::Index>(spec.dimension());
  std::vector<Eigen::VectorXd> eq_rows, in_rows;
  std::vector<double> eq_rhs, in_rhs;
  auto unit = [dim](Eigen::Index i, double v) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
    r(i) = v;
    return r;
  };

  switch (spec.kind()) {
    case ModelKind::linear:
    case ModelKind::piecewise_linear: {
      eq_rows.push_back(Eigen::VectorXd::Ones(dim));
      eq_rhs.push_back(1.0);
      for (Eigen::Index i = 0; i < dim; ++i) {
        in_rows.push_back(unit(i, -1.0));
        in_rhs.push_back(0.0);
      }
      break;
    }
    case ModelKind::spline: {
      Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
      for (std::size_t j = 0; j < spec.num_criteria(); ++j) {
        const auto off = static_cast<Eigen::Index>(spec.block_offset(j));
        const auto& grid = spec.grid(j);
        const int gamma = spec.segments(j);
        auto piece_row = [&](int k, const Eigen::Vector4d& coeffs) {
          Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
          r.segment<4>(off + 4 * k) = coeffs;
          return r;
        };
        // continuity of value, slope and curvature at interior breakpoints
        for (int k = 0; k + 1 < gamma; ++k) {
          const double x = grid[k + 1];
          eq_rows.push_back(piece_row(k, cubic_value_row(x)) - piece_row(k + 1, cubic_value_row(x)));
          eq_rhs.push_back(0.0);
          eq_rows.push_back(piece_row(k, cubic_slope_row(x)) - piece_row(k + 1, cubic_slope_row(x)));
          eq_rhs.push_back(0.0);
          eq_rows.push_back(piece_row(k, cubic_curvature_row(x)) - piece_row(k + 1, cubic_curvature_row(x)));
          eq_rhs.push_back(0.0);
        }
        // non-negative value and slope at every breakpoint
        for (int i = 0; i <= gamma; ++i) {
          const int piece = i == 0 ? 0 : i - 1;
          in_rows.push_back(-piece_row(piece, cubic_value_row(grid[i])));
          in_rhs.push_back(0.0);
          in_rows.push_back(-piece_row(piece, cubic_slope_row(grid[i])));
          in_rhs.push_back(0.0);
        }
        eq_rows.push_back(piece_row(0, cubic_value_row(grid.front())));
        eq_rhs.push_back(0.0);
        total += piece_row(gamma - 1, cubic_value_row(grid.back()));
      }
      eq_rows.push_back(total);
      eq_rhs.push_back(1.0);
      break;
    }
    case ModelKind::general: {
      Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
      for (std::size_t j = 0; j < spec.num_criteria(); ++j) {
        const auto off = static_cast<Eigen::Index>(spec.block_offset(j));
        const int levels = spec.segments(j);
        for (int k = 0; k < levels; ++k) {
          Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
          r(off + k) = 1.0;
          r(off + k + 1) = -1.0;
          in_rows.push_back(r);
          in_rhs.push_back(0.0);
        }
        eq_rows.push_back(unit(off, 1.0));
        eq_rhs.push_back(0.0);
        total(off + levels) = 1.0;
      }
      eq_rows.push_back(total);
      eq_rhs.push_back(1.0);
      break;
    }
  }

  LinearConstraintSet cs;
  cs.eq_matrix.resize(static_cast<Eigen::Index>(eq_rows.size()), dim);
  cs.eq_rhs.resize(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t i = 0; i < eq_rows.size(); ++i) {
    cs.eq_matrix.row(static_cast<Eigen::Index>(i)) = eq_rows[i].transpose();
    cs.eq_rhs(static_cast<Eigen::Index>(i)) = eq_rhs[i];
  }
  cs.in_matrix.resize(static_cast<Eigen::Index>(in_rows.size()), dim);
  cs.in_rhs.resize(static_cast<Eigen::Index>(in_rows.size()));
  for (std::size_t i = 0; i < in_rows.size(); ++i) {
    cs.in_matrix.row(static_cast<Eigen::Index>(i)) = in_rows[i].transpose();
    cs.in_rhs(static_cast<Eigen::Index>(i)) = in_rhs[i];
  }
  return cs;
}

ComplexityForm build_complexity_form(const ModelSpec& spec, const Multipliers& multipliers) {
  const bool needs_c2 = spec.kind() != ModelKind::linear;
  if (!(multipliers.c1 > 0.0) || (needs_c2 && !(multipliers.c2 > 0.0))) {
    throw ParameterError("complexity multipliers must be positive");
  }
  return ComplexityForm{complexity_hessian(spec, multipliers.c1, needs_c2 ? multipliers.c2 : 0.0), multipliers};
}

double shape_penalty(const ModelSpec& spec, const Eigen::VectorXd& theta) {
  if (spec.kind() == ModelKind::linear) return 0.0;
  return theta.dot(complexity_hessian(spec, 0.0, 1.0) * theta);
}

double evaluate_value(const FittedModel& model, std::span<const double> row, LevelLookup lookup) {
  if (static_cast<std::size_t>(model.theta.size()) != model.spec.dimension()) {
    throw DimensionError("theta does not match the model layout");
  }
  return model.theta.dot(build_feature_map(model.spec, row, lookup));
}

double marginal_value(const ModelSpec& spec, const Eigen::VectorXd& theta, std::size_t j, double x) {
  const auto off = static_cast<Eigen::Index>(spec.block_offset(j));
  const auto len = static_cast<Eigen::Index>(spec.block_size(j));
  Eigen::VectorXd block(len);
  criterion_features(spec, j, x, LevelLookup::interpolate, block);
  return theta.segment(off, len).dot(block);
}

std::vector<double> trade_off_weights(const ModelSpec& spec, const Eigen::VectorXd& theta) {
  std::vector<double> w(spec.num_criteria());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = marginal_value(spec, theta, j, spec.scale(j).beta);
  return w;
}

std::vector<MarginalCurve> render_marginals(const FittedModel& model, int samples_per_interval) {
  if (samples_per_interval < 1) throw ParameterError("samples_per_interval must be >= 1");
  const ModelSpec& spec = model.spec;
  std::vector<MarginalCurve> curves(spec.num_criteria());
  for (std::size_t j = 0; j < spec.num_criteria(); ++j) {
    auto& c = curves[j];
    const auto& grid = spec.grid(j);
    if (spec.kind() == ModelKind::linear || spec.kind() == ModelKind::general) {
      c.x = grid;
    } else {
      for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        for (int i = 0; i < samples_per_interval; ++i) {
          c.x.push_back(grid[k] + (grid[k + 1] - grid[k]) * i / samples_per_interval);
        }
      }
      c.x.push_back(grid.back());
    }
    c.u.reserve(c.x.size());
    for (double x : c.x) c.u.push_back(marginal_value(spec, model.theta, j, x));
  }
  return curves;
}

Eigen::VectorXd uniform_theta(const ModelSpec& spec) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec.dimension()));
  const double share = 1.0 / static_cast<double>(spec.num_criteria());
  for (std::size_t j = 0; j < spec.num_criteria(); ++j) {
    const auto off = static_cast<Eigen::Index>(spec.block_offset(j));
    const CriterionScale& s = spec.scale(j);
    const auto& grid = spec.grid(j);
    const int segs = spec.segments(j);
    const double slope = share / (s.beta - s.alpha);
    switch (spec.kind()) {
      case ModelKind::linear:
        theta(off) = share;
        break;
      case ModelKind::piecewise_linear:
        for (int k = 0; k < segs; ++k) theta(off + k) = slope * (grid[k + 1] - grid[k]);
        break;
      case ModelKind::spline:
        for (int k = 0; k < segs; ++k) {
          theta(off + 4 * k) = -slope * s.alpha;
          theta(off + 4 * k + 1) = slope;
        }
        break;
      case ModelKind::general:
        for (int k = 0; k <= segs; ++k) theta(off + k) = slope * (grid[k] - s.alpha);
        break;
    }
  }
  return theta;
}

std::vector<std::size_t> spline_monotonicity_violations(const ModelSpec& spec, const Eigen::VectorXd& theta,
                                                        int samples, double tolerance) {
  std::vector<std::size_t> bad;
  if (spec.kind() != ModelKind::spline) return bad;
  samples = std::max(samples, 2);
  for (std::size_t j = 0; j < spec.num_criteria(); ++j) {
    const auto off = static_cast<Eigen::Index>(spec.block_offset(j));
    const auto& grid = spec.grid(j);
    bool violated = false;
    for (int k = 0; k < spec.segments(j) && !violated; ++k) {
      const Eigen::Vector4d s = theta.segment<4>(off + 4 * k);
      for (int i = 0; i < samples; ++i) {
        const double x = grid[k] + (grid[k + 1] - grid[k]) * i / (samples - 1);
        if (cubic_slope_row(x).dot(s) < -tolerance) {
          violated = true;
          break;
        }
      }
    }
    if (violated) bad.push_back(j);
  }
  return bad;
}

}  // namespace mcsort
