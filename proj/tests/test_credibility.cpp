#include <doctest.h>

#include <random>

#include "mcsort/credibility.hpp"
#include "mcsort/error.hpp"
#include "test_support.hpp"

using namespace mcsort;
using testsupport::random_sigma;

namespace {

// Definition by explicit double sum over class pairs.
CredibilityTriple triple_oracle(const ValuedAssignment& a, const ValuedAssignment& b) {
  CredibilityTriple t;
  for (std::size_t s = 0; s < a.num_classes(); ++s)
    for (std::size_t r = 0; r < b.num_classes(); ++r) {
      const double w = a[s] * b[r];
      if (s > r) t.succ += w;
      else if (s == r) t.eq += w;
      else t.prec += w;
    }
  return t;
}

ValuedAssignment window(std::size_t q, std::size_t lo, std::size_t width) {
  std::vector<double> s(q, 0.0);
  for (std::size_t r = lo; r < lo + width; ++r) s[r] = 1.0 / static_cast<double>(width);
  return ValuedAssignment::from_vector(s);
}

}  // namespace

TEST_CASE("triple examples") {
  const auto t1 = credibility_triple(ValuedAssignment::one_hot(5, 2), ValuedAssignment::one_hot(5, 1));
  CHECK(t1.succ == 1.0);
  CHECK(t1.eq == 0.0);
  CHECK(t1.prec == 0.0);
  const auto t2 = credibility_triple(ValuedAssignment::one_hot(5, 3), ValuedAssignment::one_hot(5, 3));
  CHECK(t2.eq == 1.0);
  CHECK(t2.succ == 0.0);
  const auto half = ValuedAssignment::from_vector({0.5, 0.5});
  const auto t3 = credibility_triple(half, half);
  CHECK(t3.succ == doctest::Approx(0.25));
  CHECK(t3.eq == doctest::Approx(0.5));
  CHECK(t3.prec == doctest::Approx(0.25));
  CHECK_THROWS_AS(credibility_triple(half, ValuedAssignment::one_hot(3, 1)), DimensionError);
}

TEST_CASE("random triples sum to one, are swap symmetric and match the double sum") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 1500; ++rep) {
    const std::size_t q = 2 + testsupport::pick(rng, 7);
    const auto a = random_sigma(q, rng);
    const auto b = random_sigma(q, rng);
    const auto t = credibility_triple(a, b);
    const auto o = triple_oracle(a, b);
    CHECK(std::abs(t.succ + t.eq + t.prec - 1.0) <= 1e-12);
    CHECK(t.succ == doctest::Approx(o.succ).epsilon(1e-12));
    CHECK(t.eq == doctest::Approx(o.eq).epsilon(1e-12));
    CHECK(t.prec == doctest::Approx(o.prec).epsilon(1e-12));
    for (double v : {t.succ, t.eq, t.prec}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-15);
    }
    const auto s = credibility_triple(b, a);
    CHECK(s.succ == doctest::Approx(t.prec).epsilon(1e-12));
    CHECK(s.prec == doctest::Approx(t.succ).epsilon(1e-12));
    CHECK(s.eq == doctest::Approx(t.eq).epsilon(1e-12));
  }
}

TEST_CASE("pair objective") {
  CHECK(pair_objective_xi({0.2, 0.3, 0.5}, 0.0) == 0.0);
  CHECK(pair_objective_xi({1, 0, 0}, 0.3) == doctest::Approx(-0.3));
  CHECK(pair_objective_xi({0.25, 0.5, 0.25}, 0.2) == doctest::Approx(0.1));
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 300; ++rep) {
    const auto a = random_sigma(4, rng);
    const auto b = random_sigma(4, rng);
    const double diff = testsupport::uniform(rng, -1, 1);
    CHECK(pair_objective_xi(credibility_triple(a, b), diff) ==
          doctest::Approx(pair_objective_xi(credibility_triple(b, a), -diff)).epsilon(1e-12));
  }
}

TEST_CASE("disjoint supports give a unanimous triple") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t q = 3 + testsupport::pick(rng, 5);
    const std::size_t cut = 1 + testsupport::pick(rng, q - 1);  // a_j in [0,cut), a_i in [cut,q)
    std::vector<double> si(q, 0.0), sj(q, 0.0);
    for (std::size_t r = cut; r < q; ++r) si[r] = testsupport::uniform(rng, 0.0, 1.0);
    for (std::size_t r = 0; r < cut; ++r) sj[r] = testsupport::uniform(rng, 0.0, 1.0);
    si[cut] += 0.1;
    sj[0] += 0.1;
    auto norm = [](std::vector<double> v) {
      double s = 0;
      for (double x : v) s += x;
      for (double& x : v) x /= s;
      return ValuedAssignment::from_vector(v);
    };
    const auto t = credibility_triple(norm(si), norm(sj));
    CHECK(t.succ == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.eq == 0.0);
    CHECK(t.prec == 0.0);
  }
}

TEST_CASE("equal uniform windows: d_eq is the inverse width") {
  const std::size_t q = 7;
  double previous = 0.0;
  for (std::size_t width = q; width >= 1; --width) {
    const auto w = window(q, q - width, width);
    const double eq = credibility_triple(w, w).eq;
    CHECK(eq == doctest::Approx(1.0 / static_cast<double>(width)).epsilon(1e-12));
    CHECK(eq > previous);
    previous = eq;
  }
}

TEST_CASE("learning data") {
  const auto spec = ModelSpec::linear(unit_scales(2));
  SortingProblem p;
  p.criteria = unit_scales(2);
  p.num_classes = 3;
  p.performances.resize(3, 2);
  p.performances << 0.9, 0.2, 0.1, 0.4, 0.5, 0.5;
  p.ids = {"a", "b", "c"};

  SUBCASE("distinct crisp classes") {
    p.assignments = {ValuedAssignment::one_hot(3, 3), ValuedAssignment::one_hot(3, 1), std::nullopt};
    p.reference = {0, 1};
    const auto data = assemble_learning_data(p, spec);
    CHECK(data.y.cols() == 0);
    const Eigen::Vector2d expected = -(Eigen::Vector2d(0.9, 0.2) - Eigen::Vector2d(0.1, 0.4));
    CHECK((data.c - expected).norm() <= 1e-15);
  }
  SUBCASE("identical crisp classes") {
    p.assignments = {ValuedAssignment::one_hot(3, 2), ValuedAssignment::one_hot(3, 2), std::nullopt};
    p.reference = {0, 1};
    const auto data = assemble_learning_data(p, spec);
    CHECK(data.c.norm() == 0.0);
    REQUIRE(data.y.cols() == 1);
    CHECK((data.y.col(0) - Eigen::Vector2d(0.8, -0.2)).norm() <= 1e-15);
  }
  SUBCASE("too few references") {
    p.assignments = {ValuedAssignment::one_hot(3, 2), std::nullopt, std::nullopt};
    p.reference = {0};
    CHECK_THROWS_AS(assemble_learning_data(p, spec), InsufficientDataError);
  }
  SUBCASE("ninety-ten pattern matches a per-pair evaluator") {
    const auto sig = make_valued_examples({1, 2, 3}, 0.1, 3);
    p.assignments = {sig[2], sig[0], sig[1]};
    p.reference = {0, 1, 2};
    const auto data = assemble_learning_data(p, spec);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
    std::vector<Eigen::VectorXd> cols;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j) {
        const auto t = triple_oracle(*p.assignments[i], *p.assignments[j]);
        const Eigen::VectorXd diff = (p.performances.row(static_cast<Eigen::Index>(i)) -
                                      p.performances.row(static_cast<Eigen::Index>(j))).transpose();
        c += (t.prec - t.succ) * diff;
        if (t.eq != 0.0) cols.push_back(t.eq * diff);
      }
    CHECK((data.c - c).norm() <= 1e-14);
    REQUIRE(static_cast<std::size_t>(data.y.cols()) == cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) CHECK((data.y.col(static_cast<Eigen::Index>(k)) - cols[k]).norm() <= 1e-14);
  }
}

TEST_CASE("random learning data matches the per-pair objective") {
  // c^T theta + ||Y^T theta||_1 equals the sum of xi over reference pairs.
  std::mt19937_64 rng(9);
  for (auto kind : testsupport::kAllKinds) {
    const auto spec = testsupport::unit_spec(kind, 3, 3);
    for (int rep = 0; rep < 5; ++rep) {
      const auto p = testsupport::random_problem(12, 3, 4, rng);
      const auto data = assemble_learning_data(p, spec);
      const Eigen::VectorXd theta = testsupport::random_feasible_theta(spec, rng);
      double direct = 0.0;
      for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = i + 1; j < 12; ++j) {
          const FittedModel m{spec, {}, theta};
          const double diff = m.value(p.row(i)) - m.value(p.row(j));
          direct += pair_objective_xi(credibility_triple(p.sigma(i), p.sigma(j)), diff);
        }
      const double assembled = data.c.dot(theta) + (data.y.transpose() * theta).lpNorm<1>();
      CHECK(assembled == doctest::Approx(direct).epsilon(1e-10));
    }
  }
}

TEST_CASE("valued examples") {
  const auto mid = make_valued_examples({3}, 0.1, 5)[0].sigma();
  const std::vector<double> mid_expected{0, 0.05, 0.9, 0.05, 0};
  for (std::size_t r = 0; r < 5; ++r) CHECK(mid[r] == doctest::Approx(mid_expected[r]));
  const auto low = make_valued_examples({1}, 0.1, 5)[0].sigma();
  const std::vector<double> low_expected{0.9, 0.1, 0, 0, 0};
  for (std::size_t r = 0; r < 5; ++r) CHECK(low[r] == doctest::Approx(low_expected[r]));
  CHECK(make_valued_examples({4}, 0.0, 5)[0] == ValuedAssignment::one_hot(5, 4));
  CHECK_THROWS_AS(make_valued_examples({6}, 0.1, 5), ValidationError);
  CHECK_THROWS_AS(make_valued_examples({0}, 0.1, 5), ValidationError);
  CHECK_THROWS_AS(make_valued_examples({1}, 1.0, 5), ValidationError);
}

TEST_CASE("credibility vector validation") {
  const auto near = ValuedAssignment::from_vector({0.5, 0.5 + 1e-10});
  CHECK(near[0] + near[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(ValuedAssignment::from_vector({0.5, 0.3}), ValidationError);
  CHECK_THROWS_AS(ValuedAssignment::from_vector({1.2, -0.2}), ValidationError);
  CHECK_THROWS_AS(ValuedAssignment::from_vector({}), ValidationError);
  CHECK(ValuedAssignment::from_vector({0.2, 0.5, 0.3}).top_class() == 2);
  CHECK(ValuedAssignment::from_vector({0.4, 0.2, 0.4}).top_class() == 1);
}
