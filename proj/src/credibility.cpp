#include "mcsort/credibility.hpp"

#include <cmath>
#include <numeric>

#include "mcsort/error.hpp"

namespace mcsort {

ValuedAssignment ValuedAssignment::from_vector(std::vector<double> sigma) {
  if (sigma.empty()) throw DimensionError("credibility vector is empty");
  double sum = 0.0;
  for (double v : sigma) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("credibility degrees must be finite and nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("credibility degrees sum to " + std::to_string(sum) + ", expected 1");
  }
  if (sum != 1.0) {
    for (double& v : sigma) v /= sum;
  }
  return ValuedAssignment(std::move(sigma));
}

ValuedAssignment ValuedAssignment::one_hot(std::size_t q, std::size_t cls) {
  if (cls < 1 || cls > q) throw ValidationError("class index " + std::to_string(cls) + " outside 1.." + std::to_string(q));
  std::vector<double> sigma(q, 0.0);
  sigma[cls - 1] = 1.0;
  return ValuedAssignment(std::move(sigma));
}

std::size_t ValuedAssignment::top_class() const {
  std::size_t best = 0;
  for (std::size_t s = 1; s < sigma_.size(); ++s) {
    if (sigma_[s] > sigma_[best]) best = s;
  }
  return best + 1;
}

std::vector<double> SortingProblem::row(std::size_t i) const {
  std::vector<double> r(num_criteria());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = performances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return r;
}

const ValuedAssignment& SortingProblem::sigma(std::size_t i) const {
  if (i >= assignments.size() || !assignments[i]) {
    throw ValidationError("alternative " + (i < ids.size() ? ids[i] : std::to_string(i)) + " has no assignment");
  }
  return *assignments[i];
}

void SortingProblem::validate() const {
  const std::size_t m = num_alternatives();
  if (static_cast<std::size_t>(performances.cols()) != criteria.size()) {
    throw DimensionError("performance table has " + std::to_string(performances.cols()) + " columns for " +
                         std::to_string(criteria.size()) + " criteria");
  }
  if (ids.size() != m || assignments.size() != m) throw DimensionError("ids/assignments do not match the table");
  if (num_classes < 2) throw ParameterError("at least two classes are required");
  for (const auto& c : criteria) {
    if (!(c.alpha < c.beta)) throw RangeError("criterion " + c.name + " has alpha >= beta");
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < criteria.size(); ++j) {
      const double x = performances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double tol = 1e-9 * (criteria[j].beta - criteria[j].alpha);
      if (!(x >= criteria[j].alpha - tol && x <= criteria[j].beta + tol)) {
        throw RangeError("alternative " + ids[i] + ": performance on " + criteria[j].name + " outside its scale");
      }
    }
    if (assignments[i] && assignments[i]->num_classes() != num_classes) {
      throw DimensionError("alternative " + ids[i] + ": credibility vector has the wrong length");
    }
  }
  for (std::size_t i : reference) {
    if (i >= m) throw DimensionError("reference index out of range");
    if (!assignments[i]) throw ValidationError("reference alternative " + ids[i] + " has no assignment");
  }
  for (std::size_t i : test) {
    if (i >= m) throw DimensionError("test index out of range");
  }
}

SortingProblem SortingProblem::with_split(std::vector<std::size_t> ref, std::vector<std::size_t> tst) const {
  SortingProblem p = *this;
  std::sort(ref.begin(), ref.end());
  std::sort(tst.begin(), tst.end());
  p.reference = std::move(ref);
  p.test = std::move(tst);
  return p;
}

bool operator==(const SortingProblem& a, const SortingProblem& b) {
  return a.criteria == b.criteria && a.ids == b.ids && a.num_classes == b.num_classes &&
         a.assignments == b.assignments && a.reference == b.reference && a.test == b.test &&
         a.performances.rows() == b.performances.rows() && a.performances.cols() == b.performances.cols() &&
         a.performances == b.performances;
}

CredibilityTriple credibility_triple(const ValuedAssignment& sigma_i, const ValuedAssignment& sigma_j) {
  const std::size_t q = sigma_i.num_classes();
  if (sigma_j.num_classes() != q) throw DimensionError("credibility vectors have different lengths");
  // prefix sums of sigma_j: below[s] = sum_{r<s} sigma_j(r)
  CredibilityTriple t;
  double below = 0.0;
  for (std::size_t s = 0; s < q; ++s) {
    t.succ += sigma_i[s] * below;
    t.eq += sigma_i[s] * sigma_j[s];
    below += sigma_j[s];
  }
  double above = 0.0;
  for (std::size_t s = q; s-- > 0;) {
    t.prec += sigma_i[s] * above;
    above += sigma_j[s];
  }
  return t;
}

double pair_objective_xi(const CredibilityTriple& t, double diff) {
  return -t.succ * diff + t.eq * std::abs(diff) + t.prec * diff;
}

LearningData assemble_learning_data(const SortingProblem& problem, const ModelSpec& spec) {
  const auto& ref = problem.reference;
  if (ref.size() < 2) throw InsufficientDataError("at least two reference alternatives are required");
  LearningData data;
  data.features = build_feature_matrix(spec, problem.performances, ref);
  const Eigen::Index dim = static_cast<Eigen::Index>(spec.dimension());
  data.c = Eigen::VectorXd::Zero(dim);
  std::vector<Eigen::VectorXd> columns;
  for (std::size_t a = 0; a < ref.size(); ++a) {
    for (std::size_t b = a + 1; b < ref.size(); ++b) {
      const CredibilityTriple t = credibility_triple(problem.sigma(ref[a]), problem.sigma(ref[b]));
      const Eigen::VectorXd diff = data.features.col(static_cast<Eigen::Index>(a)) - data.features.col(static_cast<Eigen::Index>(b));
      data.c += (t.prec - t.succ) * diff;
      if (t.eq > 0.0) {
        columns.push_back(t.eq * diff);
        data.y_pairs.emplace_back(a, b);
      }
    }
  }
  data.y.resize(dim, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) data.y.col(static_cast<Eigen::Index>(k)) = columns[k];
  return data;
}

std::vector<ValuedAssignment> make_valued_examples(const std::vector<std::size_t>& classes, double spread,
                                                   std::size_t q) {
  if (!(spread >= 0.0 && spread < 1.0)) throw ParameterError("spread must lie in [0, 1)");
  if (q < 2) throw ParameterError("at least two classes are required");
  std::vector<ValuedAssignment> out;
  out.reserve(classes.size());
  for (std::size_t cls : classes) {
    if (cls < 1 || cls > q) throw ValidationError("class index " + std::to_string(cls) + " outside 1.." + std::to_string(q));
    std::vector<double> sigma(q, 0.0);
    const std::size_t k = cls - 1;
    sigma[k] = 1.0 - spread;
    if (k == 0) {
      sigma[1] += spread;
    } else if (k + 1 == q) {
      sigma[k - 1] += spread;
    } else {
      sigma[k - 1] += 0.5 * spread;
      sigma[k + 1] += 0.5 * spread;
    }
    out.push_back(ValuedAssignment::from_vector(std::move(sigma)));
  }
  return out;
}

}  // namespace mcsort
