#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cubeshap/error.hpp"
#include "cubeshap/experiments.hpp"
#include "cubeshap/report.hpp"

using namespace cubeshap;

namespace {

ContributionMatrix contributions(std::vector<double> v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.flat().begin());
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < v.size(); ++i) cols.push_back("c" + std::to_string(i));
  return ContributionMatrix(make_labels({"r"}), make_labels(cols), std::move(m), 0.0, "test");
}

Matrix row(std::vector<double> v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.flat().begin());
  return m;
}

}  // namespace

TEST_CASE("mase") {
  CHECK(mase(contributions({1, 2}), row({1, 2})) == 0.0);
  CHECK(mase(contributions({0, 0}), row({1, 3})) == 1.0);
  CHECK(mase(contributions({2, 0}), row({1, 0})) == 1.0);
  try {
    mase(contributions({1, 1}), row({0, 0}));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ZeroDenominator);
  }
}

TEST_CASE("summarize") {
  const auto pt = summarize(3.0, {1, 2, 3, 4});
  CHECK(pt.x == 3.0);
  CHECK(pt.mean == 2.5);
  CHECK(pt.stderr_mean == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(pt.repetitions == 4);
  CHECK(summarize(0, {7}).stderr_mean == 0.0);
}

TEST_CASE("linear simulation") {
  LinearSimConfig cfg;
  cfg.repetitions = 3;

  SUBCASE("deterministic for a seed") {
    const auto a = linear_sim_once(cfg, 50, 1);
    const auto b = linear_sim_once(cfg, 50, 1);
    CHECK(a.error == b.error);
    CHECK(a.estimate.values() == b.estimate.values());
    CHECK(linear_sim_once(cfg, 50, 2).error != a.error);
  }
  SUBCASE("completeness against the expected delta") {
    for (std::size_t rep = 0; rep < 5; ++rep) {
      const auto r = linear_sim_once(cfg, 20, rep);
      CHECK(std::abs(r.estimate.values().total() - r.expected_delta) <= 1e-9 * std::max(1.0, std::abs(r.expected_delta)));
      CHECK(r.truth.rows() >= cfg.p_min);
      CHECK(r.truth.rows() <= cfg.p_max);
      CHECK(r.truth.cols() <= cfg.q_max);
    }
  }
  SUBCASE("noiseless references recover the injected faults") {
    auto quiet = cfg;
    quiet.reference_stddev = 0.0;
    for (std::size_t rep = 0; rep < 5; ++rep) CHECK(linear_sim_once(quiet, 10, rep).error <= 1e-12);
  }
  SUBCASE("error shrinks with more references") {
    auto c = cfg;
    c.repetitions = 20;
    c.sample_sizes = {5, 500};
    const auto report = run_linear_sim(c);
    REQUIRE(report.points.size() == 2);
    CHECK(report.points[1].mean < report.points[0].mean);
    c.threads = 4;
    const auto threaded = run_linear_sim(c);
    CHECK(threaded.points[0].mean == report.points[0].mean);
    CHECK(threaded.points[1].mean == report.points[1].mean);
  }
  SUBCASE("bad configuration") {
    auto c = cfg;
    c.q_min = 0;
    CHECK_THROWS_AS(linear_sim_once(c, 10, 0), Error);
    CHECK_THROWS_AS(linear_sim_once(cfg, 0, 0), Error);
  }
}

TEST_CASE("distinct-user simulation") {
  DauSimConfig cfg;
  cfg.users = 800;
  cfg.references = 3;

  SUBCASE("deterministic and complete") {
    const auto a = dau_sim_once(cfg, 0.2, 0);
    const auto b = dau_sim_once(cfg, 0.2, 0);
    CHECK(a.attribution.values() == b.attribution.values());
    CHECK(a.faulty == b.faulty);
    CHECK(a.top.size() == a.faulty.size());
    CHECK(std::abs(a.attribution.residual()) <= 1e-9 * std::max(1.0, std::abs(a.attribution.delta_y())));
    CHECK(a.attribution.method() == "nongam-exact");
  }
  SUBCASE("every page faulty gives perfect accuracy") {
    auto c = cfg;
    c.faulty_counts = {5};
    for (double decay : {0.1, 1.0}) CHECK(dau_sim_once(c, decay, 0).accuracy == 1.0);
  }
  SUBCASE("full decay isolates a single faulty page") {
    // with decay 1 the faulty page loses every view
    auto c = cfg;
    c.faulty_counts = {1};
    const auto r = dau_sim_once(c, 1.0, 3);
    CHECK(r.accuracy == 1.0);
  }
  SUBCASE("invalid faulty counts") {
    auto c = cfg;
    c.faulty_counts = {6};
    CHECK_THROWS_AS(dau_sim_once(c, 0.5, 0), Error);
  }
}

TEST_CASE("admissions reproduction") {
  const auto c = run_berkeley();
  double sum = 0;
  for (double v : c.values().flat()) sum += v;
  CHECK(std::abs(sum - c.delta_y()) <= 1e-12);
  const auto ranking = rank_subcubes(c);
  std::vector<std::string> order;
  for (const auto& [label, v] : ranking) order.push_back(label);
  CHECK(order == std::vector<std::string>{"A", "B", "E", "C", "F", "D"});
}
