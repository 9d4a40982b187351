#include <doctest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "mcsort/error.hpp"
#include "mcsort/io.hpp"
#include "mcsort/learner.hpp"
#include "test_support.hpp"

using namespace mcsort;

namespace {

template <class F>
std::string text(F&& f) {
  std::ostringstream o;
  f(o);
  return o.str();
}

std::vector<std::pair<std::string, ValuedAssignment>> read_sigma(const std::string& s, std::size_t q) {
  std::istringstream in(s);
  return read_assignments(in, q, "asg.csv");
}

std::string error_of(const std::string& s, std::size_t q) {
  try {
    read_sigma(s, q);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

TEST_CASE("shortest round-trip number format") {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 1000; ++rep) {
    const double x = testsupport::uniform(rng, -1e6, 1e6) * std::pow(10.0, testsupport::uniform(rng, -12, 0));
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("assignment files") {
  SUBCASE("crisp rows become one-hot vectors") {
    const auto rows = read_sigma("id,class\na,1\nb,3\n", 3);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].first == "b");
    CHECK(rows[1].second.sigma() == std::vector<double>{0, 0, 1});
  }
  SUBCASE("sums within 1e-10 are renormalized") {
    const auto rows = read_sigma("id,sigma_1,sigma_2\na,0.50000000005,0.5\nb,0.4,0.59999999995\n", 2);
    for (const auto& [id, s] : rows) CHECK(std::abs(s[0] + s[1] - 1.0) <= 1e-15);
  }
  SUBCASE("a row summing to 0.8 is rejected with its line number") {
    const std::string msg = error_of("id,sigma_1,sigma_2\na,0.5,0.5\nb,0.4,0.4\n", 2);
    CHECK(msg.find("asg.csv:3") != std::string::npos);
    CHECK(msg.find("sum") != std::string::npos);
  }
  SUBCASE("other malformed rows") {
    CHECK(error_of("id,class\na,4\n", 3).find("asg.csv:2") != std::string::npos);
    CHECK(error_of("id,class\na,1.5\n", 3).find("out of range") != std::string::npos);
    CHECK(error_of("id,sigma_1,sigma_2\na,x,1\n", 2).find("non-numeric") != std::string::npos);
    CHECK(error_of("id,sigma_1,sigma_2\na,1\n", 2).find("columns") != std::string::npos);
    CHECK(error_of("id,sigma_1,sigma_2,sigma_3\na,1,0,0\n", 2).find("credibility columns") != std::string::npos);
    CHECK(error_of("id,sigma_1,sigma_2\na,-0.5,1.5\n", 2).find("nonnegative") != std::string::npos);
  }
  SUBCASE("writing") {
    const std::vector<std::string> ids{"a", "b"};
    const std::vector<ValuedAssignment> crisp{ValuedAssignment::one_hot(3, 2), ValuedAssignment::one_hot(3, 3)};
    CHECK(text([&](std::ostream& o) { write_assignments(o, ids, crisp, true); }) == "id,class\na,2\nb,3\n");
    CHECK(text([&](std::ostream& o) { write_assignments(o, ids, crisp); }) == "id,sigma_1,sigma_2,sigma_3\na,0,1,0\nb,0,0,1\n");
  }
}

TEST_CASE("performance files") {
  std::istringstream in("id,g1,g2\nx,1,2.5\ny,-3,4e-2\n");
  const auto t = read_performances(in, "perf.csv");
  CHECK(t.criteria == std::vector<std::string>{"g1", "g2"});
  CHECK(t.values(1, 1) == 0.04);
  CHECK(text([&](std::ostream& o) { write_performances(o, t); }) == "id,g1,g2\nx,1,2.5\ny,-3,0.04\n");
  std::istringstream bad("id,g1\nx,abc\n");
  CHECK_THROWS_WITH_AS(read_performances(bad, "perf.csv"), doctest::Contains("perf.csv:2"), ValidationError);
  std::istringstream no_id("name,g1\nx,1\n");
  CHECK_THROWS_AS(read_performances(no_id, "perf.csv"), ValidationError);
}

TEST_CASE("cost criteria are negated and ranges default to the observed span") {
  std::istringstream perf("id,price,quality\na,10,0.2\nb,30,0.9\nc,20,0.5\n");
  std::istringstream cfg(R"({"classes": 2, "criteria": [{"name": "price", "direction": "cost"}, {"name": "quality", "beta": 1.0}]})");
  const auto table = read_performances(perf);
  const auto config = read_criteria_config(cfg);
  const auto p = make_problem(table, config, {{"a", ValuedAssignment::one_hot(2, 2)}, {"b", ValuedAssignment::one_hot(2, 1)}});
  CHECK(p.performances(1, 0) == -30.0);
  CHECK(p.criteria[0].alpha == -30.0);
  CHECK(p.criteria[0].beta == -10.0);
  CHECK(p.criteria[1].alpha == 0.2);
  CHECK(p.criteria[1].beta == 1.0);
  CHECK(p.reference == std::vector<std::size_t>{0, 1});
  CHECK(p.test == std::vector<std::size_t>{2});
  CHECK_THROWS_AS(make_problem(table, config, {{"zz", ValuedAssignment::one_hot(2, 1)}}), ValidationError);
  CHECK_THROWS_AS(make_problem(table, config, {{"a", ValuedAssignment::one_hot(3, 1)}}), DimensionError);
}

TEST_CASE("generated problem survives a CSV round trip") {
  for (double spread : {0.0, 0.2}) {
    GeneratorConfig g;
    g.alternatives = 60;
    g.criteria = 3;
    g.classes = 4;
    g.spread = spread;
    g.seed = 42;
    const auto ds = make_dataset(g);
    const SortingProblem& p = ds.problem;

    PerformanceTable table;
    for (const auto& c : p.criteria) table.criteria.push_back(c.name);
    table.ids = p.ids;
    table.values = p.performances;
    CriteriaConfig cfg;
    cfg.classes = p.num_classes;
    for (const auto& c : p.criteria) cfg.criteria.push_back({c.name, c.direction, c.alpha, c.beta});
    auto rows = [&](const std::vector<std::size_t>& idx) {
      std::vector<std::string> ids;
      std::vector<ValuedAssignment> sig;
      for (std::size_t i : idx) {
        ids.push_back(p.ids[i]);
        sig.push_back(p.sigma(i));
      }
      return text([&](std::ostream& o) { write_assignments(o, ids, sig, spread == 0.0); });
    };

    std::istringstream perf_in(text([&](std::ostream& o) { write_performances(o, table); }));
    std::istringstream cfg_in(text([&](std::ostream& o) { write_criteria_config(o, cfg); }));
    std::istringstream ref_in(rows(p.reference)), test_in(rows(p.test));
    const auto loaded_cfg = read_criteria_config(cfg_in);
    const auto loaded = make_problem(read_performances(perf_in), loaded_cfg, read_assignments(ref_in, g.classes),
                                     read_assignments(test_in, g.classes));
    CHECK(loaded == p);
  }
}

TEST_CASE("model files round-trip bit-exactly") {
  std::mt19937_64 rng(43);
  for (auto kind : testsupport::kAllKinds) {
    auto p = testsupport::random_problem(12, 3, 3, rng);
    p.criteria[1].direction = Direction::cost;
    p.criteria[1].alpha = -1.0;
    p.criteria[1].beta = 0.0;
    p.performances.col(1).array() -= 1.0;
    Hyperparams h;
    h.multipliers = {0.37, 1.0 / 3.0};
    h.segments = {3};
    const auto fit = admm_fit(p, make_model_spec(p, kind, h.segments), h);
    const auto bundle = ModelBundle::from_fit(fit.model, p);
    const std::string first = text([&](std::ostream& o) { write_model(o, bundle); });
    std::istringstream in(first);
    const auto back = read_model(in);
    CHECK(back.model.spec.kind() == kind);
    CHECK(back.model.spec.scales() == bundle.model.spec.scales());
    for (std::size_t j = 0; j < 3; ++j) CHECK(back.model.spec.grid(j) == bundle.model.spec.grid(j));
    REQUIRE(back.model.theta.size() == bundle.model.theta.size());
    for (Eigen::Index k = 0; k < back.model.theta.size(); ++k) CHECK(same_bits(back.model.theta(k), bundle.model.theta(k)));
    CHECK(same_bits(back.model.multipliers.c2, 1.0 / 3.0));
    CHECK(back.reference_problem() == bundle.reference_problem());
    CHECK(text([&](std::ostream& o) { write_model(o, back); }) == first);
  }
  std::istringstream junk("{\"format\": \"other\"}");
  CHECK_THROWS_AS(read_model(junk), ValidationError);
  std::istringstream broken("{ not json");
  CHECK_THROWS_AS(read_model(broken), ValidationError);
}
