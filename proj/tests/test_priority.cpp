#include <doctest.h>

#include <random>
#include <sstream>

#include <json.hpp>

#include "mcsort/error.hpp"
#include "mcsort/learner.hpp"
#include "mcsort/priority.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace mcsort;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using oracles::consistency_oracle;

namespace {

SortingProblem two_reference(const Eigen::Vector2d& better, const Eigen::Vector2d& worse) {
  SortingProblem p;
  p.criteria = unit_scales(2);
  p.num_classes = 2;
  p.performances.resize(2, 2);
  p.performances.row(0) = better.transpose();
  p.performances.row(1) = worse.transpose();
  p.ids = {"a2", "a1"};
  p.assignments = {ValuedAssignment::one_hot(2, 2), ValuedAssignment::one_hot(2, 1)};
  p.reference = {0, 1};
  return p;
}

}  // namespace

TEST_CASE("class performance") {
  std::mt19937_64 rng(1);
  std::vector<ValuedAssignment> a;
  for (int i = 0; i < 20; ++i) a.push_back(testsupport::random_sigma(4, rng));
  const auto same = class_performance(a, a);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(same.card_pf[r] == 0.0);
    CHECK(same.ord_pf[r] == 0.0);
  }
  const auto swap = class_performance({ValuedAssignment::one_hot(2, 1)}, {ValuedAssignment::one_hot(2, 2)});
  CHECK(swap.card_pf == std::vector<double>{1.0, 1.0});
  CHECK(swap.ord_pf == std::vector<double>{1.0, 1.0});
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<ValuedAssignment> x, y;
    for (int i = 0; i < 10; ++i) {
      x.push_back(testsupport::random_sigma(5, rng));
      y.push_back(testsupport::random_sigma(5, rng));
    }
    const auto cp = class_performance(x, y);
    for (std::size_t r = 0; r < 5; ++r) {
      CHECK(cp.card_pf[r] >= 0.0);
      CHECK(cp.card_pf[r] <= 1.0);
      CHECK(cp.ord_pf[r] >= 0.0);
      CHECK(cp.ord_pf[r] <= 1.0);
    }
  }
  CHECK_THROWS_AS(class_performance(a, {a[0]}), DimensionError);
}

TEST_CASE("consistency scores") {
  SUBCASE("two crisp references") {
    const auto p = two_reference({0.9, 0.3}, {0.2, 0.6});
    const FittedModel m{ModelSpec::linear(p.criteria), {}, Eigen::Vector2d(0.7, 0.3)};
    const auto sc = class_consistency_scores(m, p);
    const double diff = m.value(p.row(0)) - m.value(p.row(1));
    CHECK(sc.values(1) == doctest::Approx(diff));
    CHECK((sc.gradients.row(1).transpose() - Eigen::Vector2d(0.7, -0.3)).norm() <= 1e-15);
  }
  SUBCASE("one shared credibility vector") {
    std::mt19937_64 rng(2);
    auto p = testsupport::random_problem(6, 2, 3, rng);
    for (auto& s : p.assignments) s = ValuedAssignment::one_hot(3, 2);
    const FittedModel m{ModelSpec::linear(p.criteria), {}, Eigen::Vector2d(0.5, 0.5)};
    const auto sc = class_consistency_scores(m, p);
    CHECK(sc.values.cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("definition and finite differences") {
    std::mt19937_64 rng(3);
    for (auto kind : testsupport::kAllKinds) {
      for (int rep = 0; rep < 6; ++rep) {
        const auto p = testsupport::random_problem(9, 2, 4, rng);
        const auto spec = testsupport::unit_spec(kind, 2, 2);
        const FittedModel m{spec, {}, testsupport::random_feasible_theta(spec, rng)};
        const auto sc = class_consistency_scores(m, p);
        const auto oracle = consistency_oracle(m, p);
        for (std::size_t s = 0; s < 4; ++s) CHECK(sc.values(static_cast<Eigen::Index>(s)) == doctest::Approx(oracle[s]).epsilon(1e-10));
        const double h = 1e-5;
        for (Eigen::Index i = 0; i < m.theta.size(); ++i) {
          FittedModel up = m, down = m;
          up.theta(i) += h;
          down.theta(i) -= h;
          const auto ou = consistency_oracle(up, p), od = consistency_oracle(down, p);
          for (std::size_t s = 0; s < 4; ++s) {
            const double fd = (ou[s] - od[s]) / (2 * h);
            CHECK(std::abs(sc.gradients(static_cast<Eigen::Index>(s), i) - fd) <= 1e-6);
          }
        }
      }
    }
  }
}

TEST_CASE("ascent direction examples") {
  LinearConstraintSet eq_only;
  eq_only.eq_matrix = Eigen::RowVector2d(1, 1);
  eq_only.eq_rhs = VectorXd::Ones(1);
  const auto tau = PriorityRanking::from_order({1, 2}, 2);
  const VectorXd theta = Eigen::Vector2d(0.5, 0.5);

  MatrixXd same(2, 2);
  same << 1, 0, 1, 0;
  const auto d1 = find_ascent_direction(same, tau, theta, eq_only);
  CHECK(d1.prefix == 2);
  CHECK(std::abs(d1.d(0) + d1.d(1)) <= 1e-9);
  CHECK(d1.d(0) > 0.0);

  MatrixXd opposed(2, 2);
  opposed << 1, 0, -1, 0;
  const auto d2 = find_ascent_direction(opposed, tau, theta, eq_only);
  CHECK(d2.prefix == 1);
  CHECK(d2.d(0) > 0.0);

  MatrixXd zero_top(2, 2);
  zero_top << 0, 0, 1, 0;
  const auto d3 = find_ascent_direction(zero_top, tau, theta, eq_only);
  CHECK(d3.prefix == 0);
  CHECK(d3.d.norm() == 0.0);
}

TEST_CASE("prefix search matches enumeration of all binary vectors") {
  std::mt19937_64 rng(4);
  int checked = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t q = 2 + testsupport::pick(rng, 3);
    const auto spec = rep % 2 == 0 ? testsupport::unit_spec(ModelKind::linear, 4, 1)
                                   : testsupport::unit_spec(ModelKind::piecewise_linear, 2, 3);
    const auto cons = build_base_constraints(spec);
    const auto n = static_cast<Eigen::Index>(spec.dimension());
    VectorXd theta = testsupport::random_feasible_theta(spec, rng);
    if (rep % 3 == 0) {
      theta = VectorXd::Zero(n);  // a vertex, so several rows are active
      theta(static_cast<Eigen::Index>(testsupport::pick(rng, static_cast<std::size_t>(n)))) = 1.0;
    }
    MatrixXd g(static_cast<Eigen::Index>(q), n);
    for (Eigen::Index s = 0; s < g.rows(); ++s)
      for (Eigen::Index j = 0; j < n; ++j) g(s, j) = testsupport::uniform(rng, -1, 1);
    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), std::size_t{1});
    std::shuffle(order.begin(), order.end(), rng);
    const auto tau = PriorityRanking::from_order(order, q);

    const std::size_t brute = oracles::brute_force_prefix(g, order, theta, cons);
    const auto dir = find_ascent_direction(g, tau, theta, cons);
    CHECK(dir.prefix == brute);
    if (dir.prefix > 0) {
      CHECK((cons.eq_matrix * dir.d).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK(dir.d.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
      for (std::size_t s = 0; s < dir.prefix; ++s) CHECK(g.row(static_cast<Eigen::Index>(order[s] - 1)).dot(dir.d) >= 1e-10);
      // a small step stays feasible
      CHECK(cons.max_violation(theta + 1e-9 * dir.d) <= 1e-12);
    }
    ++checked;
  }
  CHECK(checked == 60);
}

TEST_CASE("line search") {
  const auto cons = build_base_constraints(ModelSpec::linear(unit_scales(2)));
  const auto s1 = line_search(Eigen::Vector2d(0.8, 0.2), Eigen::Vector2d(1, -1), cons);
  CHECK(s1.lambda == doctest::Approx(0.2));
  CHECK_FALSE(s1.capped);
  CHECK(line_search(Eigen::Vector2d(1, 0), Eigen::Vector2d(1, -1), cons).lambda == 0.0);
  LinearConstraintSet eq_only;
  eq_only.eq_matrix = Eigen::RowVector2d(1, 1);
  eq_only.eq_rhs = VectorXd::Ones(1);
  const auto s3 = line_search(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(1, -1), eq_only, 1e3);
  CHECK(s3.lambda == 1e3);
  CHECK(s3.capped);
}

TEST_CASE("adjustment") {
  SUBCASE("already optimal model does not move") {
    const auto p = two_reference({0.9, 0.5}, {0.1, 0.5});
    const FittedModel m{ModelSpec::linear(p.criteria), {1.0, 1.0}, Eigen::Vector2d(1.0, 0.0)};
    const auto res = adjust(m, p, PriorityRanking::from_order({2, 1}, 2), {});
    CHECK((res.trace.termination == Termination::zero_direction || res.trace.termination == Termination::zero_step));
    CHECK(res.model.theta == m.theta);
    for (const auto& r : res.trace.records) CHECK_FALSE(r.accepted);
  }

  GeneratorConfig cfg;
  cfg.alternatives = 80;
  cfg.criteria = 3;
  cfg.classes = 4;
  cfg.levels = 10;
  cfg.spread = 0.2;
  cfg.seed = 7;
  const auto data = make_dataset(cfg);
  std::mt19937_64 rng(8);
  const auto [ref, test] = stratified_split(data.classes, 0.7, rng);
  const auto problem = data.problem.with_split(ref, test);
  Hyperparams h;
  h.segments = {2};
  const auto fit = fit_model(problem, ModelKind::piecewise_linear, h);
  const auto cons = build_base_constraints(fit.model.spec);
  const auto omega = build_complexity_form(fit.model.spec, fit.model.multipliers);

  SUBCASE("invariants") {
    for (double zeta : {0.0, 0.05, 0.5, 5.0}) {
      AdjustOptions opt;
      opt.zeta = zeta;
      opt.max_iterations = 20;
      const auto tau = PriorityRanking::from_order({4, 3, 2, 1}, 4);
      const auto res = adjust(fit.model, problem, tau, opt);
      const auto grads = class_consistency_scores(fit.model, problem).gradients;
      double top = (grads.row(3) * fit.model.theta)(0);
      FittedModel cur = fit.model;
      int accepted = 0;
      for (const auto& r : res.trace.records) {
        if (!r.accepted) continue;
        ++accepted;
        cur.theta += r.lambda * r.d;
        CHECK(cons.max_violation(cur.theta) <= 1e-7);
        const double next_top = r.consistency(3);
        CHECK(next_top >= top - 1e-9);
        top = next_top;
        CHECK(r.omega_after <= (1.0 + zeta) * res.trace.omega_initial + 1e-9);
      }
      CHECK((cur.theta - res.model.theta).norm() <= 1e-9);
      CHECK(omega(res.model.theta) <= (1.0 + zeta) * res.trace.omega_initial + 1e-9);
      CHECK(cons.max_violation(res.model.theta) <= 1e-7);
      if (zeta == 0.0) {
        // only steps that do not raise the complexity are accepted
        for (const auto& r : res.trace.records)
          if (r.accepted) CHECK(r.omega_after <= res.trace.omega_initial + 1e-9);
      }
      if (res.trace.termination == Termination::complexity_cap) {
        CHECK(res.trace.records.back().omega_after > (1.0 + zeta) * res.trace.omega_initial);
        CHECK_FALSE(res.trace.records.back().accepted);
      }
      MESSAGE("zeta " << zeta << ": " << accepted << " accepted, " << to_string(res.trace.termination));
    }
  }

  SUBCASE("trace records") {
    AdjustOptions opt;
    opt.zeta = 0.5;
    opt.max_iterations = 5;
    const auto res = adjust(fit.model, problem, PriorityRanking::from_order({4, 3, 2, 1}, 4), opt);
    std::ostringstream out;
    res.trace.write_jsonl(out);
    std::istringstream in(out.str());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      if (lines == 0) CHECK(j.contains("omega_initial"));
      else CHECK(j.at("iteration").get<int>() == static_cast<int>(lines));
      ++lines;
    }
    CHECK(lines == res.trace.records.size() + 1);
  }

  SUBCASE("validation stop") {
    AdjustOptions opt;
    opt.zeta = 10.0;
    opt.max_iterations = 30;
    for (std::size_t k = 0; k < problem.reference.size(); k += 4) opt.validation.push_back(problem.reference[k]);
    const auto res = adjust(fit.model, problem, PriorityRanking::from_order({4, 3, 2, 1}, 4), opt);
    if (res.trace.termination == Termination::validation_stop) CHECK_FALSE(res.trace.records.back().accepted);
    CHECK(cons.max_violation(res.model.theta) <= 1e-7);
  }

  SUBCASE("bad rankings") {
    CHECK_THROWS_AS(PriorityRanking::from_order({1, 1, 2, 3}, 4), ParameterError);
    CHECK_THROWS_AS(PriorityRanking::from_order({1, 2, 3}, 4), ParameterError);
    CHECK_THROWS_AS(PriorityRanking::from_order({0, 1, 2, 3}, 4), ParameterError);
  }
}
